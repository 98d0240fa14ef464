"""Regenerate the bundled layout documents under crates/core/data."""
import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def spots_in(rect, n, descriptors):
    x, y, w, h = rect
    pts = []
    cols = max(1, min(n, 4))
    rows = (n + cols - 1) // cols
    for i in range(n):
        c, r = i % cols, i // cols
        px = x + w * (c + 0.5) / cols
        py = y + h * (r + 0.5) / rows
        pts.append(([round(px, 2), round(py, 2)], descriptors[i % len(descriptors)]))
    return pts


def build(name, bounds, regions, doors, exits, spot_plan, patrol, entry=10.0):
    counter = 1
    out = []
    for rid, kind, rect in regions:
        reg = {"id": rid, "kind": kind, "rect": rect, "hiding_spots": [], "exits": []}
        if rid in spot_plan:
            n, desc = spot_plan[rid]
            for pos, d in spots_in(rect, n, desc):
                reg["hiding_spots"].append({"id": f"hide_spot_{counter}", "pos": pos, "descriptor": d})
                counter += 1
        for eid, ereg, pos, d in exits:
            if ereg == rid:
                reg["exits"].append({"id": eid, "pos": pos, "descriptor": d})
        out.append(reg)
    return {
        "name": name,
        "bounds": bounds,
        "regions": out,
        "doors": [{"a": a, "b": b, "pos": p} for a, b, p in doors],
        "patrol_route": patrol,
        "shooter_entry_time_s": entry,
    }


CLASSROOM = ["under a student desk", "behind the teacher's desk", "inside the supply closet", "behind a bookshelf"]

school = build(
    "school",
    [72, 48],
    [
        ("north_yard", "yard", [0, 42, 72, 6]),
        ("south_yard", "yard", [0, 0, 72, 6]),
        ("west_yard", "yard", [0, 6, 6, 36]),
        ("east_yard", "yard", [66, 6, 6, 36]),
        ("courtyard", "yard", [28, 22, 16, 8]),
        ("classroom_1", "classroom", [6, 6, 12, 12]),
        ("classroom_2", "classroom", [18, 6, 12, 12]),
        ("cafeteria", "cafeteria", [30, 6, 12, 12]),
        ("entrance_south", "entrance", [42, 6, 4, 12]),
        ("kitchen", "kitchen", [46, 6, 8, 12]),
        ("classroom_3", "classroom", [54, 6, 12, 12]),
        ("hallway1", "corridor", [10, 18, 52, 4]),
        ("entrance_west", "entrance", [6, 18, 4, 4]),
        ("entrance_east", "entrance", [62, 18, 4, 4]),
        ("hallway3", "corridor", [10, 22, 4, 8]),
        ("lounge", "lounge", [14, 22, 14, 8]),
        ("bathroom_1", "bathroom", [44, 22, 7, 8]),
        ("bathroom_2", "bathroom", [51, 22, 7, 8]),
        ("hallway4", "corridor", [58, 22, 4, 8]),
        ("hallway2", "corridor", [10, 30, 52, 4]),
        ("classroom_4", "classroom", [6, 34, 12, 8]),
        ("classroom_5", "classroom", [18, 34, 12, 8]),
        ("hallway5", "corridor", [30, 34, 4, 4]),
        ("entrance_north", "entrance", [30, 38, 4, 4]),
        ("classroom_6", "classroom", [34, 34, 12, 8]),
        ("classroom_7", "classroom", [46, 34, 10, 8]),
        ("classroom_8", "classroom", [56, 34, 10, 8]),
    ],
    [
        ("classroom_1", "hallway1", [14, 18]),
        ("classroom_2", "hallway1", [24, 18]),
        ("cafeteria", "hallway1", [36, 18]),
        ("entrance_south", "hallway1", [44, 18]),
        ("kitchen", "hallway1", [50, 18]),
        ("classroom_3", "hallway1", [60, 18]),
        ("entrance_south", "south_yard", [44, 6]),
        ("cafeteria", "entrance_south", [42, 12]),
        ("entrance_south", "kitchen", [46, 12]),
        ("kitchen", "south_yard", [50, 6]),
        ("entrance_west", "hallway1", [10, 20]),
        ("entrance_west", "west_yard", [6, 20]),
        ("entrance_east", "hallway1", [62, 20]),
        ("entrance_east", "east_yard", [66, 20]),
        ("hallway3", "hallway1", [12, 22]),
        ("hallway3", "hallway2", [12, 30]),
        ("lounge", "hallway3", [14, 26]),
        ("lounge", "hallway2", [21, 30]),
        ("courtyard", "hallway1", [36, 22]),
        ("courtyard", "hallway2", [36, 30]),
        ("bathroom_1", "hallway1", [47, 22]),
        ("bathroom_2", "hallway4", [58, 26]),
        ("hallway4", "hallway1", [60, 22]),
        ("hallway4", "hallway2", [60, 30]),
        ("hallway2", "classroom_4", [14, 34]),
        ("hallway2", "classroom_5", [24, 34]),
        ("hallway2", "hallway5", [32, 34]),
        ("hallway2", "classroom_6", [40, 34]),
        ("hallway2", "classroom_7", [51, 34]),
        ("hallway2", "classroom_8", [61, 34]),
        ("hallway5", "entrance_north", [32, 38]),
        ("entrance_north", "north_yard", [32, 42]),
    ],
    [
        ("exit_north", "north_yard", [36, 46], "north gate to the street"),
        ("exit_south", "south_yard", [48, 2], "south gate by the bus loop"),
        ("exit_west", "west_yard", [2, 24], "west gate to the sports field"),
        ("exit_east", "east_yard", [70, 24], "east gate to the parking lot"),
    ],
    {
        **{f"classroom_{i}": (4, CLASSROOM) for i in range(1, 9)},
        "lounge": (4, ["behind the sofa", "under the staff table", "inside the coat closet", "behind the photocopier"]),
        "cafeteria": (8, ["under a lunch table", "behind the vending machines", "behind the stacked chairs",
                          "under the stage apron", "behind a pillar", "under a lunch table by the window",
                          "behind the tray return", "inside the storage alcove"]),
        "kitchen": (5, ["behind the serving counter", "inside the walk-in pantry", "under the prep table",
                        "behind the dish racks", "inside the cold storage room"]),
        "bathroom_1": (3, ["inside a locked stall", "behind the entry partition", "inside the end stall"]),
        "bathroom_2": (3, ["inside a locked stall", "behind the entry partition", "inside the end stall"]),
        "courtyard": (3, ["behind the planter wall", "behind the sculpture", "under the covered bench"]),
        "north_yard": (2, ["behind the bike shelter", "behind the low wall"]),
        "south_yard": (2, ["behind a parked bus", "behind the bins"]),
        "west_yard": (1, ["behind the bleachers"]),
        "east_yard": (1, ["behind a parked car"]),
    },
    ["entrance_east", "hallway1", "cafeteria", "hallway1", "hallway3", "hallway2", "hallway5", "hallway2", "hallway4"],
)

DESKS = ["under a workstation desk", "behind a filing cabinet", "behind a partition screen",
         "under the printer table", "behind a pillar", "inside the supply cupboard"]

office = build(
    "office",
    [68, 48],
    [
        ("south_plaza", "yard", [0, 0, 60, 5]),
        ("north_plaza", "yard", [0, 43, 60, 5]),
        ("east_lot", "yard", [60, 0, 8, 48]),
        ("lobby", "entrance", [24, 5, 12, 18]),
        ("open_office_1", "office", [0, 5, 24, 18]),
        ("open_office_2", "office", [36, 5, 24, 18]),
        ("corridor_main", "corridor", [0, 23, 60, 4]),
        ("open_office_3", "office", [0, 27, 20, 16]),
        ("meeting_room", "office", [20, 27, 10, 8]),
        ("break_room", "kitchen", [30, 27, 10, 8]),
        ("restroom_1", "bathroom", [20, 35, 10, 8]),
        ("restroom_2", "bathroom", [30, 35, 10, 8]),
        ("open_office_4", "office", [40, 27, 20, 16]),
    ],
    [
        ("lobby", "south_plaza", [30, 5]),
        ("lobby", "open_office_1", [24, 14]),
        ("lobby", "open_office_2", [36, 14]),
        ("lobby", "corridor_main", [30, 23]),
        ("open_office_1", "corridor_main", [10, 23]),
        ("open_office_2", "corridor_main", [50, 23]),
        ("corridor_main", "open_office_3", [10, 27]),
        ("corridor_main", "meeting_room", [25, 27]),
        ("corridor_main", "break_room", [35, 27]),
        ("corridor_main", "open_office_4", [50, 27]),
        ("open_office_3", "restroom_1", [20, 39]),
        ("open_office_4", "restroom_2", [40, 39]),
        ("open_office_3", "north_plaza", [10, 43]),
        ("open_office_4", "north_plaza", [50, 43]),
        ("open_office_2", "east_lot", [60, 14]),
        ("open_office_4", "east_lot", [60, 35]),
        ("open_office_1", "south_plaza", [12, 5]),
    ],
    [
        ("exit_south", "south_plaza", [30, 2], "main doors onto the street"),
        ("exit_north", "north_plaza", [30, 46], "rear service gate"),
        ("exit_east", "east_lot", [64, 24], "parking lot ramp"),
    ],
    {
        "open_office_1": (6, DESKS),
        "open_office_2": (6, DESKS),
        "open_office_3": (5, DESKS),
        "open_office_4": (5, DESKS),
        "meeting_room": (3, ["under the conference table", "behind the presentation screen", "inside the AV closet"]),
        "break_room": (3, ["behind the kitchen island", "inside the pantry", "behind the fridge"]),
        "restroom_1": (2, ["inside a locked stall", "behind the entry partition"]),
        "restroom_2": (2, ["inside a locked stall", "behind the entry partition"]),
        "lobby": (1, ["behind the reception desk"]),
    },
    ["lobby", "open_office_1", "corridor_main", "open_office_3", "corridor_main", "open_office_4", "open_office_2"],
)

for doc in (school, office):
    (DATA / f"{doc['name']}.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(doc["name"], len(doc["regions"]), sum(len(r["hiding_spots"]) for r in doc["regions"]),
          sum(len(r["exits"]) for r in doc["regions"]))
