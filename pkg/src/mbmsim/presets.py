"""Named experiment presets anchoring the reproduction recipes.

Values are defaults only; config files and flags override them.
"""

PRESETS = {
    # 2x8 layered link, 16 bits per use, exhaustive ML over 2^16 points
    "fig2a": {
        "n": 2, "bits_per_unit": 8, "k": 8, "exhaustive": True,
        "ebn0": [0.0, 1.0, 2.0, 3.0, 4.0],
    },
    # 1x8 reference link with one i.i.d. table of 2^16 points
    "fig2b": {
        "n": 1, "bits_per_unit": 16, "k": 8, "exhaustive": True,
        "ebn0": [0.0, 1.0, 2.0, 3.0, 4.0],
    },
    # 4x16 link, 32 bits per use, beam search P=128 T=2 over all 24 orders
    "fig4": {
        "n": 4, "bits_per_unit": 8, "k": 16, "exhaustive": False,
        "p": 128, "iterations": 2, "permutations": "all",
        "ebn0": [-6.0, -5.5, -5.0, -4.5],
    },
    # fig4 link plus a rate-15/16 Reed-Solomon code over GF(2^8)
    "fig5-rs": {
        "n": 4, "bits_per_unit": 8, "k": 16, "exhaustive": False,
        "p": 128, "iterations": 2, "permutations": "all",
        "rs_w": 8, "rs_len": 240, "rs_dim": 225,
        "ebn0": [-7.0, -6.5, -6.0],
    },
}
