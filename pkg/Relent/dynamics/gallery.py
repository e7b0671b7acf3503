"""Built-in example systems, read from ``Relent/gallery_data`` and re-checked on load."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Tuple, Union

from Relent.dynamics.exceptions import GalleryCheckFailed, UnknownGalleryEntry
from Relent.dynamics.factor import (
    FactorCode,
    clump_analysis,
    count_preimages,
    fiber_counts,
    validate_code,
)
from Relent.dynamics.measures import MarkovMeasure, PeriodicMeasure
from Relent.dynamics.sft import Sft, is_irreducible, validate, word_count
from Relent.utils.text_format import (
    format_code,
    format_measure,
    format_sft,
    load_code,
    load_measure,
    load_sft,
    read_text,
)

LOGGER = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "gallery_data"
NAMES = ("GOLDEN", "FULL2", "XOR", "ABK", "HOMC", "HOMCPLUS", "EX5")


@dataclass
class GalleryEntry:
    name: str
    X: Sft
    Y: Sft
    code: FactorCode
    notes: str
    measures: Dict[str, Union[MarkovMeasure, PeriodicMeasure]] = field(default_factory=dict)


@dataclass
class GalleryCheck:
    fact: str
    passed: bool
    detail: str = ""


@dataclass
class GalleryReport:
    name: str
    checks: List[GalleryCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[GalleryCheck]:
        return [check for check in self.checks if not check.passed]

    def record(self, fact: str, passed: bool, detail: str = "") -> None:
        self.checks.append(GalleryCheck(fact, bool(passed), detail))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": [{"fact": c.fact, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def names() -> Tuple[str, ...]:
    return NAMES


def _notes(text: str) -> str:
    lines = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        lines.append(line.lstrip("#").strip())
    return " ".join(lines)


def _read(name: str) -> GalleryEntry:
    folder = DATA_DIR / name
    x = load_sft(folder / "domain.sft")
    y = load_sft(folder / "image.sft")
    code = load_code(folder / "code.map", x, y)
    measures = {}
    for path in sorted(folder.glob("*.mkv")):
        base = y if path.stem == "nu" else x
        measures[path.stem] = load_measure(path, base)
    return GalleryEntry(name, x, y, code, _notes(read_text(folder / "domain.sft")), measures)


def _common(entry: GalleryEntry, report: GalleryReport) -> None:
    for label, sft in (("domain", entry.X), ("image", entry.Y)):
        diagnostics = validate(sft)
        report.record(f"{label} is a valid 0-1 system", diagnostics.valid, "; ".join(diagnostics.errors))
        report.record(f"{label} is irreducible", is_irreducible(sft))
    diagnostics = validate_code(entry.code)
    report.record("code is a factor code up to length 8", diagnostics.valid, "; ".join(diagnostics.errors))


def _golden(entry: GalleryEntry, report: GalleryReport) -> None:
    a, b = 2, 3
    for n in range(1, 21):
        count = word_count(entry.X, n)
        if count != a:
            report.record("word counts are Fibonacci numbers", False, f"n={n}: {count} != {a}")
            return
        a, b = b, a + b
    report.record("word counts are Fibonacci numbers", True, "n <= 20")


def _full2(entry: GalleryEntry, report: GalleryReport) -> None:
    bad = [n for n in range(1, 21) if word_count(entry.X, n) != 2 ** n]
    report.record("word counts are powers of 2", not bad, f"failed at n={bad}" if bad else "n <= 20")


def _xor(entry: GalleryEntry, report: GalleryReport) -> None:
    bad = []
    for level in fiber_counts(entry.code, 8):
        bad.extend(entry.Y.spell(w) for w, vector in level.items() if sum(vector) != 2)
    report.record("every image word of length <= 8 has 2 preimages", not bad, ", ".join(bad[:10]))


def _abk(entry: GalleryEntry, report: GalleryReport) -> None:
    a, b = entry.Y.symbol("a"), entry.Y.symbol("b")
    bad = []
    for k in range(1, 11):
        count = count_preimages(entry.code, (a,) + (b,) * k + (a,))
        if count != k + 1:
            bad.append(f"k={k}: {count}")
    report.record("a b^k a has k+1 preimages for k <= 10", not bad, ", ".join(bad))
    singles = clump_analysis(entry.code, k_max=1).singleton_clumps
    report.record("a is the only singleton clump", singles == ["a"], f"found {singles}")


def _homc(entry: GalleryEntry, report: GalleryReport) -> None:
    sizes = [len(clump) for clump in entry.code.clumps]
    report.record("both clumps have two symbols", sizes == [2, 2], f"sizes {sizes}")
    clumps = clump_analysis(entry.code, k_max=6)
    report.record("no singleton block up to order 6", clumps.first_singleton_order is None)


def _homcplus(entry: GalleryEntry, report: GalleryReport) -> None:
    report.record("no singleton clump", not clump_analysis(entry.code, k_max=1).singleton_clumps)
    for word in ("b b", "a b b a"):
        count = count_preimages(entry.code, entry.Y.parse_word(word))
        report.record(f"{word} has a unique preimage", count == 1, f"{count} preimages")


def _ex5(entry: GalleryEntry, report: GalleryReport) -> None:
    clumps = clump_analysis(entry.code, k_max=6)
    report.record(
        "no singleton block up to order 6",
        clumps.first_singleton_order is None,
        "; ".join(f"k={k}: {w}" for k, w in clumps.higher_block_singletons[:10]),
    )


FACTS: Dict[str, Callable[[GalleryEntry, GalleryReport], None]] = {
    "GOLDEN": _golden,
    "FULL2": _full2,
    "XOR": _xor,
    "ABK": _abk,
    "HOMC": _homc,
    "HOMCPLUS": _homcplus,
    "EX5": _ex5,
}


def self_check(entry: GalleryEntry) -> GalleryReport:
    """Re-derive the documented facts of ``entry``; never raises on a failed fact."""
    report = GalleryReport(entry.name)
    _common(entry, report)
    FACTS[entry.name](entry, report)
    for check in report.failures:
        LOGGER.error("%s: %s failed (%s)", entry.name, check.fact, check.detail)
    return report


def load(name: str, check: bool = True) -> GalleryEntry:
    key = name.strip().upper()
    if key not in NAMES:
        raise UnknownGalleryEntry(f"Unknown gallery entry {name!r}; choose from {', '.join(NAMES)}")
    entry = _read(key)
    if check:
        report = self_check(entry)
        if not report.passed:
            raise GalleryCheckFailed(
                f"{key}: " + "; ".join(f"{c.fact} ({c.detail})" for c in report.failures)
            )
    LOGGER.debug("Loaded gallery entry %s", key)
    return entry


def export(entry: GalleryEntry, directory: Union[str, Path]) -> List[Path]:
    """Write ``entry`` in the text formats under ``directory``; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "domain.sft": format_sft(entry.X),
        "image.sft": format_sft(entry.Y),
        "code.map": format_code(entry.code),
    }
    files.update({f"{name}.mkv": format_measure(m) for name, m in entry.measures.items()})
    written = []
    for filename, text in files.items():
        path = directory / filename
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
