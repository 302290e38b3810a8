"""Published MCNC figures used for comparison in reports.

NEIGHBOR_STATS: (blocks, nets, neighbours min, max, avg)
WIRELENGTH_2D: best known 2D wire-length on the original die, um
RESULTS_3D: (EO grid, squeezed volume, 3D wire-length) with die height 1
"""

NEIGHBOR_STATS = {
    "apte": (9, 97, 8, 8, 8),
    "xerox": (10, 203, 9, 9, 9),
    "hp": (11, 83, 5, 10, 7),
    "ami33": (33, 123, 32, 32, 32),
    "ami49": (49, 408, 2, 35, 18),
}

WIRELENGTH_2D = {
    "apte": 513_061,
    "xerox": 370_993,
    "hp": 153_328,
    "ami33": 58_627,
    "ami49": 640_509,
}

RESULTS_3D = {
    "apte": ((2, 2, 3), (5018, 4972, 3), 137_325),
    "xerox": ((2, 2, 3), (3864, 3829, 3), 290_183),
    "hp": ((2, 2, 3), (3758, 3542, 3), 105_848),
    "ami33": ((3, 3, 4), (911, 1163, 4), 42_183),
    "ami49": ((4, 4, 4), (5769, 5979, 4), 704_135),
}

INSTANCES = tuple(RESULTS_3D)


def grid_for(name: str) -> tuple[int, int, int] | None:
    entry = RESULTS_3D.get(name)
    return entry[0] if entry else None
