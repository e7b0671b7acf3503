import io
import json
import math

import pytest

from Relent import __main__ as entrypoint
from Relent.cli import Cli, RunConfig
from Relent.dynamics import gallery

pytestmark = pytest.mark.usefixtures("commands")


def run(*argv):
    out = io.StringIO()
    status = Cli.main(list(argv), out=out)
    return status, out.getvalue()


def report(*argv):
    status, text = run(*argv)
    assert status == 0, text
    return json.loads(text)


def test_count_over_abk():
    found = report("count", "--gallery", "ABK", "--word", "a b a b b a", "--list")
    assert found["schema_version"] == "1.0.0"
    assert found["command"] == "count"
    assert found["result"]["count"] == 6
    assert len(found["result"]["preimages"]) == 6
    assert found["parameters"]["gallery"] == "ABK"
    assert found["parameters"]["word"] == "a b a b b a"


def test_bound_for_xor():
    assert report("bound", "--gallery", "XOR", "--nu", "nu")["result"] == {"N": 2}


def test_parry_in_nats_and_bits():
    phi = (1 + math.sqrt(5)) / 2
    in_nats = report("parry", "--gallery", "GOLDEN")
    assert in_nats["unit"] == "nats"
    assert in_nats["result"]["lambda"] == pytest.approx(phi)
    assert in_nats["result"]["entropy"] == pytest.approx(math.log(phi))
    in_bits = report("parry", "--gallery", "GOLDEN", "--bits")
    assert in_bits["unit"] == "bits"
    assert in_bits["result"]["entropy"] == pytest.approx(math.log2(phi))
    assert in_bits["result"]["lambda"] == pytest.approx(phi)
    assert in_bits["result"]["word_counts"]["8"] == 55


def test_tsv_report():
    status, text = run("count", "--gallery", "ABK", "--word", "abba", "--format", "tsv")
    assert status == 0
    lines = text.splitlines()
    assert lines[0] == "key\tvalue"
    assert "result.count\t3" in lines
    assert "schema_version\t1.0.0" in lines


def test_identical_runs_give_identical_reports():
    argv = ("relpressure", "--gallery", "ABK", "--nu", "nu", "--n", "16", "--trials", "500", "--seed", "3")
    first, second = run(*argv), run(*argv)
    assert first == second
    assert json.loads(first[1])["parameters"]["seed"] == 3


def test_relpressure_over_an_orbit():
    found = report("relpressure", "--gallery", "ABK", "--orbit", "a b")
    assert found["result"]["exact"] is True
    assert found["result"]["value"] == pytest.approx(0.5 * math.log(2))


def test_relpressure_needs_one_target():
    status, text = run("relpressure", "--gallery", "ABK", "--word", "abba", "--orbit", "ab")
    assert status == 2
    assert json.loads(text)["error"]["type"] == "ConfigError"


def test_singleton_report():
    found = report(
        "relmax", "singleton", "--gallery", "ABK", "--nu", "nu", "--cylinder", "a b1 b2 a b2 a", "--loops", "3"
    )["result"]
    assert found["h_rel"] == pytest.approx(sum(0.5 ** k * math.log(k + 1) for k in range(1, 200)) / 3, abs=1e-6)
    assert found["cylinder"]["probability"] == "1/144"
    assert found["clump_mass"] == "1/3"
    assert [loop["preimages"] for loop in found["loops"]] == [2, 3, 4]


def test_coarse_truncation_is_an_error():
    status, text = run("relmax", "singleton", "--gallery", "ABK", "--nu", "nu", "--truncation", "4")
    assert status == 2
    assert json.loads(text)["error"]["type"] == "TruncationTooCoarse"


def test_singleton_accepts_clump_and_L():
    found = report("relmax", "singleton", "--gallery", "ABK", "--nu", "nu", "--clump", "a", "--L", "40")
    assert found["parameters"]["symbol"] == "a"
    assert found["parameters"]["truncation"] == 40
    assert found["result"]["truncation"] == 40
    assert found["result"]["h_rel"] == pytest.approx(sum(0.5 ** k * math.log(k + 1) for k in range(1, 200)) / 3, abs=1e-6)


def test_periodic_fiber_report():
    found = report("relmax", "periodic", "--gallery", "ABK", "--orbit", "b")["result"]
    assert found["maximal_count"] == 2
    assert found["determinate"] is False


def test_homclump_from_K():
    found = report("relmax", "homclump", "--K", "2")["result"]
    assert found["x"] == pytest.approx(1 / 3)
    assert found["states"][0] == "a1 a1"


def test_exact_posterior_probability():
    found = report("join", "posterior", "--gallery", "XOR", "--mu", "mu_p70", "--window", "0 1", "--exact")["result"]
    assert found["probability"] == "21/100"


def test_equidistribute_over_periodic_points():
    found = report("relmax", "equidistribute", "--gallery", "ABK", "--nu", "nu", "--n", "2", "--method", "periodic")
    assert found["result"]["points"] == {
        name: "1/6" for name in ("a b1", "a b2", "b1 a", "b1 b1", "b2 a", "b2 b2")
    }


def test_interleave_entropy_accepts_nmax():
    argv = ("join", "interleave-entropy", "--gallery", "ABK", "--mu1", "lift_b1", "--mu2", "lift_b2", "--nu", "nu")
    found = report(*argv, "--length", "10^4", "--nmax", "2", "--seed", "1")
    assert found["parameters"]["n_max"] == 2
    assert found["result"]["length"] == 10000
    assert len(found["result"]["entropy"]["conditional"]) == 3
    assert report(*argv, "--length", "10^4", "--n-max", "2", "--seed", "1")["result"] == found["result"]


def test_gallery_list_and_export(tmp_path):
    listed = report("gallery", "list")["result"]["entries"]
    assert [e["name"] for e in listed] == list(gallery.names())
    target = tmp_path / "homc"
    found = report("gallery", "export", "--name", "homc", "--out", str(target))
    assert found["parameters"]["out"] == str(target)
    assert "nu.mkv" in found["result"]["files"]
    checked = report(
        "validate",
        "--domain", str(target / "domain.sft"),
        "--image", str(target / "image.sft"),
        "--code", str(target / "code.map"),
    )["result"]
    assert checked["code"]["valid"] is True
    assert checked["domain"]["irreducible"] is True


def test_unknown_gallery_entry_exits_with_2():
    status, text = run("parry", "--gallery", "TENT")
    assert status == 2
    assert json.loads(text)["error"]["type"] == "UnknownGalleryEntry"


@pytest.mark.parametrize(
    "argv",
    [
        ("count", "--gallery", "ABK"),
        ("count", "--gallery", "ABK", "--word", "ab", "--frobnicate"),
        ("clumps", "--gallery", "ABK", "--k-max", "30"),
        ("join", "orthogonality", "--gallery", "XOR", "--mu1", "mu_p70", "--mu2", "mu_p30", "--trials", "ten"),
        (),
    ],
)
def test_bad_arguments_exit_with_2(argv):
    status, text = run(*argv)
    assert status == 2
    error = json.loads(text)["error"]
    assert error["type"] == "ConfigError"


def test_missing_file_exits_with_3(tmp_path):
    status, text = run("parry", "--system", str(tmp_path / "missing.sft"))
    assert status == 3
    assert json.loads(text)["error"]["type"] == "FileNotFoundError"


def test_unknown_command_config():
    status = Cli.run(RunConfig(("no", "such")), out=io.StringIO())
    assert status == 2


def test_module_entrypoint(capsys):
    assert entrypoint.main(["gallery", "check", "--name", "abk"]) == 0
    found = json.loads(capsys.readouterr().out)
    assert found["result"]["passed"] is True
