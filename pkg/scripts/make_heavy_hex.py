"""Write the 156-qubit heavy-hex edge list (Heron r2 layout) to the package data dir.

Layout: 8 rows of 16 qubits; row r holds qubits 20r..20r+15 and the four
bridge qubits 20r+16..20r+19 join row r to row r+1. Even gaps attach at
row offsets 3, 7, 11, 15 and odd gaps at 1, 5, 9, 13.
"""
from pathlib import Path

ROWS, ROW_LEN, STRIDE = 8, 16, 20


def heavy_hex_edges():
    edges = []
    for r in range(ROWS):
        base = STRIDE * r
        edges += [(base + c, base + c + 1) for c in range(ROW_LEN - 1)]
        if r == ROWS - 1:
            continue
        offsets = (3, 7, 11, 15) if r % 2 == 0 else (1, 5, 9, 13)
        for b, off in enumerate(offsets):
            bridge = base + ROW_LEN + b
            edges.append((base + off, bridge))
            edges.append((bridge, base + STRIDE + off))
    return sorted(edges)


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "sqc" / "data" / "heavy_hex_156.txt"
    edges = heavy_hex_edges()
    lines = ["# 156-qubit heavy-hex coupling map (Heron r2 layout), one edge per line"]
    lines += [f"{i} {j}" for i, j in edges]
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(edges)} edges to {out}")
