"""Regenerate tests/fixtures/rng_vectors.txt (lines: seed,index,first 8 raw outputs in hex)."""

from pathlib import Path

from zchange.numerics import RngStream

CASES = [(0, 0), (0, 1), (1, 0), (7, 0), (7, 1), (42, 0), (42, 3), (2**64 - 1, 0), (20120501, 12345)]


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "rng_vectors.txt"
    lines = []
    for seed, index in CASES:
        raw = RngStream(seed, index).raw(8)
        lines.append(f"{seed},{index}," + " ".join(f"{int(v):016x}" for v in raw))
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} vectors to {out}")


if __name__ == "__main__":
    main()
