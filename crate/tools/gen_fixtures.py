"""Writes the hand-scripted classifier fixtures under crates/core/tests/fixtures."""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "crates" / "core" / "tests" / "fixtures"
SCHOOL = json.loads((ROOT / "crates" / "core" / "data" / "school.json").read_text())

SPOTS = {s["id"]: s["pos"] for r in SCHOOL["regions"] for s in r["hiding_spots"]}
EXITS = {e["id"]: e["pos"] for r in SCHOOL["regions"] for e in r["exits"]}
INCIDENT = 10.0
ORDER = [
    "RUN_FOLLOWING_CROWD",
    "HIDE_IN_PLACE",
    "RUN_INDEPENDENTLY",
    "HIDE_AFTER_RUNNING",
    "FREEZE",
    "FIGHT",
]


def rec(agent, t, loc, pos, action, movement="stay_still", posture="standing", heading=None, co=0,
        thought="", mood="calm", shooter=None, visible=False, utterance="", vocal="silent", memory=""):
    post = t >= INCIDENT
    return {
        "record": "decision",
        "agent": agent,
        "time_s": t,
        "trigger": "incident" if t == INCIDENT else ("initial" if t == 0 else "reached"),
        "phase": "post_incident" if post else "pre_incident",
        "location": loc,
        "position": pos,
        "mood": mood,
        "health": 100.0,
        "posture": posture,
        "shooter_region": shooter if post else None,
        "shooter_visible": visible,
        "thought": thought,
        "action_id": action,
        "movement": movement,
        "vocal_mode": vocal,
        "utterance": utterance,
        "memory_update": memory,
        "heading_exit": heading,
        "co_movers": co,
        "fallback": False,
        "offered": [],
    }


def terminal(agent, status, t, region, pos, posture="standing", exit_id=None, changes=0, start=None):
    return {
        "record": "terminal",
        "agent": agent,
        "incident_time_s": INCIDENT,
        "incident_region": start[0],
        "incident_position": start[1],
        "terminal": {
            "status": status,
            "time_s": t,
            "region": region,
            "position": pos,
            "posture": posture,
            "exit_id": exit_id,
            "health": 100.0,
            "region_changes_post": changes,
        },
    }


def archetypes():
    lines, gold = [], {}

    a = "ava_crowd"
    lines += [
        rec(a, 0.0, "cafeteria", [36.0, 12.0], "stay_still"),
        rec(a, 10.0, "cafeteria", [36.0, 12.0], "entrance_south", "sprint", heading="exit_south", co=5,
            mood="panicked", shooter="hallway1", thought="Everyone is running for the south doors."),
        rec(a, 12.0, "entrance_south", [43.0, 12.0], "south_yard", "sprint", heading="exit_south", co=4,
            mood="panicked", shooter="hallway1"),
        rec(a, 14.5, "south_yard", [44.0, 4.0], "exit_south", "sprint", heading="exit_south", co=3,
            mood="panicked", shooter="hallway1"),
    ]
    lines.append(terminal(a, "exited", 16.0, "south_yard", EXITS["exit_south"], exit_id="exit_south",
                          changes=2, start=("cafeteria", [36.0, 12.0])))
    gold[a] = "RUN_FOLLOWING_CROWD"

    a = "ben_hide"
    lines += [
        rec(a, 0.0, "classroom_1", [10.0, 10.0], "stay_still"),
        rec(a, 10.0, "classroom_1", [10.0, 10.0], "hide_spot_10", "walk", mood="scared", shooter="hallway1",
            thought="Get under the desk and stay quiet."),
        rec(a, 13.0, "classroom_1", SPOTS["hide_spot_10"], "stay_still", posture="hiding", mood="scared",
            shooter="hallway1"),
    ]
    lines.append(terminal(a, "hiding", 120.0, "classroom_1", SPOTS["hide_spot_10"], posture="hiding",
                          start=("classroom_1", [10.0, 10.0])))
    gold[a] = "HIDE_IN_PLACE"

    a = "cleo_alone"
    lines += [
        rec(a, 0.0, "classroom_3", [60.0, 12.0], "stay_still"),
        rec(a, 10.0, "classroom_3", [60.0, 12.0], "hallway1", "sprint", heading="exit_east", co=0,
            mood="alert", shooter="cafeteria", thought="The east doors are closest and nobody is there."),
        rec(a, 12.0, "hallway1", [60.0, 20.0], "entrance_east", "sprint", heading="exit_east", co=1,
            mood="alert", shooter="cafeteria"),
        rec(a, 13.0, "entrance_east", [64.0, 20.0], "east_yard", "sprint", heading="exit_east", co=0,
            mood="alert", shooter="cafeteria"),
    ]
    lines.append(terminal(a, "exited", 15.0, "east_yard", EXITS["exit_east"], exit_id="exit_east",
                          changes=3, start=("classroom_3", [60.0, 12.0])))
    gold[a] = "RUN_INDEPENDENTLY"

    a = "dev_run_hide"
    lines += [
        rec(a, 0.0, "hallway2", [30.0, 32.0], "stay_still"),
        rec(a, 10.0, "hallway2", [30.0, 32.0], "classroom_5", "sprint", mood="scared", shooter="hallway2",
            visible=True, thought="Into the nearest classroom."),
        rec(a, 12.0, "classroom_5", [24.0, 36.0], "hide_spot_49", "walk", mood="scared", shooter="hallway2"),
        rec(a, 14.0, "classroom_5", SPOTS["hide_spot_49"], "stay_still", posture="hiding", mood="scared",
            shooter="hallway2"),
    ]
    lines.append(terminal(a, "hiding", 120.0, "classroom_5", SPOTS["hide_spot_49"], posture="hiding",
                          changes=1, start=("hallway2", [30.0, 32.0])))
    gold[a] = "HIDE_AFTER_RUNNING"

    a = "eli_freeze"
    lines += [
        rec(a, 0.0, "lounge", [20.0, 26.0], "stay_still"),
        rec(a, 10.0, "lounge", [20.0, 26.0], "stay_still", mood="terrified", shooter="hallway1",
            thought="I cannot move."),
        rec(a, 40.0, "lounge", [20.0, 26.0], "stay_still", mood="terrified", shooter="hallway2"),
        rec(a, 70.0, "lounge", [20.0, 26.0], "stay_still", mood="terrified", shooter="hallway2"),
    ]
    lines.append(terminal(a, "timeout", 120.0, "lounge", [20.0, 26.0], start=("lounge", [20.0, 26.0])))
    gold[a] = "FREEZE"

    a = "fay_fight"
    lines += [
        rec(a, 0.0, "hallway1", [40.0, 20.0], "stay_still"),
        rec(a, 10.0, "hallway1", [40.0, 20.0], "fight_the_shooter", "sprint", mood="determined",
            shooter="hallway1", visible=True, thought="Tackle him before he reloads.", vocal="out_loud",
            utterance="Get down, I've got him!"),
    ]
    lines.append(terminal(a, "incapacitated", 12.0, "hallway1", [38.0, 20.0], start=("hallway1", [40.0, 20.0])))
    gold[a] = "FIGHT"
    return lines, gold


def mason(exit_alone=True):
    """Lounge, a brief hide, then a solo sprint to the north yard gate."""
    a = "mason_scott"
    start = [20.0, 27.0]
    lines = [
        rec(a, 0.0, "lounge", start, "stay_still", thought="Waiting for the meeting to start."),
        rec(a, 10.0, "lounge", start, "hide_spot_35", "sprint", mood="frightened", shooter="hallway1",
            thought="Something is very wrong, get out of sight.", memory="Heard gunshots from the hallway."),
        rec(a, 12.0, "lounge", SPOTS["hide_spot_35"], "stay_still", posture="hiding", mood="frightened",
            shooter="hallway1"),
        rec(a, 30.0, "lounge", SPOTS["hide_spot_35"], "hallway2", "sprint", heading="exit_north", co=0,
            mood="frightened", shooter="kitchen", thought="The shooter moved south. Gotta sprint there."),
        rec(a, 32.0, "hallway2", [24.0, 32.0], "hallway5", "sprint", heading="exit_north", co=0,
            mood="frightened", shooter="kitchen"),
        rec(a, 34.0, "hallway5", [32.0, 36.0], "entrance_north", "sprint", heading="exit_north", co=0,
            mood="frightened", shooter="kitchen"),
        rec(a, 35.0, "entrance_north", [32.0, 40.0], "north_yard", "sprint", heading="exit_north", co=0,
            mood="frightened", shooter="kitchen"),
    ]
    if exit_alone:
        lines.append(terminal(a, "exited", 37.0, "north_yard", EXITS["exit_north"], exit_id="exit_north",
                              changes=4, start=("lounge", start)))
    else:
        lines.append(terminal(a, "hiding", 120.0, "north_yard", SPOTS["hide_spot_1"], posture="hiding",
                              changes=4, start=("lounge", start)))
    return lines


def ranking(first, second=None):
    rest = [l for l in ORDER if l not in (first, second)]
    return [first] + ([second] if second else []) + rest


def classifier_eval():
    """44 gold labels: the correct label is ranked first 39 times and second 5 times."""
    preds, gold = {}, {}
    for i in range(44):
        label = ORDER[i % 6]
        aid = f"agent_{i:02d}"
        gold[aid] = label
        if i < 39:
            preds[aid] = {"label": label, "ranking": ranking(label)}
        else:
            wrong = ORDER[(i + 1) % 6]
            preds[aid] = {"label": wrong, "ranking": ranking(wrong, label)}
    return preds, gold


def dump_jsonl(path, lines):
    decisions = sorted((l for l in lines if l["record"] == "decision"), key=lambda l: l["time_s"])
    terminals = [l for l in lines if l["record"] == "terminal"]
    path.write_text("".join(json.dumps(l) + "\n" for l in decisions + terminals))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    lines, gold = archetypes()
    dump_jsonl(OUT / "archetypes.jsonl", lines)
    (OUT / "archetypes_gold.json").write_text(json.dumps(gold, indent=2) + "\n")
    dump_jsonl(OUT / "mason_exit.jsonl", mason(True))
    dump_jsonl(OUT / "mason_hide.jsonl", mason(False))
    preds, gold = classifier_eval()
    (OUT / "rank_predictions.json").write_text(json.dumps(preds, indent=2) + "\n")
    (OUT / "rank_gold.json").write_text(json.dumps(gold, indent=2) + "\n")


if __name__ == "__main__":
    main()
