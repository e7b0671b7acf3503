def get_readable_time(seconds: float) -> str:
    """Elapsed time for log lines, e.g. ``1h: 2m: 5s`` or ``340ms``."""
    if seconds < 1:
        return f"{int(seconds * 1000)}ms"
    seconds = int(seconds)
    parts = []
    for suffix, size in (("s", 60), ("m", 60), ("h", 24)):
        seconds, result = divmod(seconds, size)
        parts.append(f"{result}{suffix}")
        if seconds == 0:
            break
    readable = ": ".join(reversed(parts))
    if seconds:
        readable = f"{seconds} days, " + readable
    return readable
