"""Print the layer split of the 156-qubit heavy-hex edges and 3-body terms."""
from sqc.circuit import color_terms
from sqc.model import heavy_hex_156


def main():
    cmap = heavy_hex_156()
    for label, terms in (("edges", cmap.edges), ("3-body", cmap.triples)):
        sched = color_terms(terms)
        print(f"{label:>7}: {len(terms)} terms -> {len(sched)} layers {sched.sizes} valid={sched.is_valid(terms)}")


if __name__ == "__main__":
    main()
