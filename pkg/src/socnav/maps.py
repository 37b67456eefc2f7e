"""Built-in floor maps.

Four navigation maps of graded size and clutter plus a 20x20 empty arena for
crowd-only studies. Wall thickness is 0.4 m and every corridor is at least
2 m wide so a 0.3 m-radius robot always has a feasible route.
"""
from __future__ import annotations

from .world import WorldMap, rect


def empty_map() -> WorldMap:
    return WorldMap("empty", 20.0, 20.0)


def training_map() -> WorldMap:
    """24x20 cluttered map used for policy training (static obstacles only)."""
    obstacles = [
        rect(6.0, 0.0, 6.4, 8.0),
        rect(6.0, 12.0, 6.4, 20.0),
        rect(12.0, 4.0, 12.4, 16.0),
        rect(18.0, 0.0, 18.4, 6.0),
        rect(18.0, 10.0, 18.4, 20.0),
        rect(9.0, 9.5, 10.0, 10.5),
        rect(15.0, 2.0, 16.0, 3.0),
        rect(15.0, 17.0, 16.0, 18.0),
        rect(21.0, 9.0, 22.0, 10.0),
        rect(2.5, 4.0, 3.5, 5.0),
        rect(2.5, 15.0, 3.5, 16.0),
    ]
    return WorldMap("training", 24.0, 20.0, obstacles)


def building_one() -> WorldMap:
    """30x24 office-like floor: two walls with door gaps plus scattered pillars."""
    obstacles = [
        # lower wall, doors at x in [5,7] and [16,18]
        rect(0.0, 6.0, 5.0, 6.4),
        rect(7.0, 6.0, 16.0, 6.4),
        rect(18.0, 6.0, 30.0, 6.4),
        # upper wall, doors at x in [10,12] and [22,24]
        rect(0.0, 17.6, 10.0, 18.0),
        rect(12.0, 17.6, 22.0, 18.0),
        rect(24.0, 17.6, 30.0, 18.0),
        # room dividers
        rect(9.8, 0.0, 10.2, 4.0),
        rect(20.0, 19.8, 20.4, 24.0),
        # pillars in the central band
        rect(5.0, 11.0, 6.0, 12.0),
        rect(14.0, 9.0, 15.0, 10.0),
        rect(24.0, 12.0, 25.0, 13.0),
        rect(17.0, 13.5, 18.0, 14.5),
        rect(26.0, 8.0, 27.0, 9.0),
        rect(2.0, 9.0, 3.0, 10.0),
        rect(10.0, 14.0, 11.0, 15.0),
    ]
    return WorldMap("building1", 30.0, 24.0, obstacles)


def building_two() -> WorldMap:
    """60x47 floor: a grid of room blocks separated by 3 m corridors."""
    obstacles = []
    for i in range(5):  # block columns
        for j in range(3):  # block rows
            x0 = 4.0 + i * 11.0
            y0 = 6.0 + j * 13.0
            obstacles.append(rect(x0, y0, x0 + 8.0, y0 + 9.0))
    # pillars along the outer corridor ring
    for x in (9.0, 31.0, 53.0):
        obstacles.append(rect(x, 2.0, x + 0.8, 2.8))
        obstacles.append(rect(x, 44.0, x + 0.8, 44.8))
    return WorldMap("building2", 60.0, 47.0, obstacles)


def building_three() -> WorldMap:
    """20x20 hall with a central block and a ring of pillars."""
    obstacles = [
        rect(8.0, 8.0, 12.0, 12.0),
        rect(3.0, 3.0, 4.0, 4.0),
        rect(16.0, 3.0, 17.0, 4.0),
        rect(3.0, 16.0, 4.0, 17.0),
        rect(16.0, 16.0, 17.0, 17.0),
        rect(9.5, 2.0, 10.5, 3.0),
        rect(9.5, 17.0, 10.5, 18.0),
        rect(2.0, 9.5, 3.0, 10.5),
        rect(17.0, 9.5, 18.0, 10.5),
    ]
    return WorldMap("building3", 20.0, 20.0, obstacles)


_BUILTIN = {
    "empty": empty_map,
    "training": training_map,
    "building1": building_one,
    "building2": building_two,
    "building3": building_three,
}


def builtin(name: str) -> WorldMap:
    try:
        return _BUILTIN[name]()
    except KeyError:
        raise ValueError(f"unknown builtin map {name!r}; have {sorted(_BUILTIN)}") from None
