"""Generate crates/core/data/personas_base.json (80 personas)."""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates/core/data/personas_base.json"

FIRST = {
    "Female": ["Ava", "Mia", "Chloe", "Grace", "Lily", "Zoe", "Nora", "Ella", "Maya", "Ruby",
               "Hannah", "Leah", "Sofia", "Isla", "Aria", "Naomi", "Clara", "Julia", "Priya", "Amara",
               "Elena", "Keiko", "Fatima", "Rosa", "Dana", "Lucia", "Tessa", "Imani", "Yara", "Vera"],
    "Male": ["Mason", "Liam", "Noah", "Ethan", "Lucas", "Owen", "Caleb", "Jonah", "Eli", "Miles",
             "Ryan", "Theo", "Adam", "Diego", "Kofi", "Arjun", "Hugo", "Omar", "Felix", "Jude",
             "Marcus", "Kenji", "Ravi", "Samuel", "Tomas", "Victor", "Isaac", "Leo", "Andre", "Wes"],
    "Non-binary": ["Riley", "Jordan", "Avery", "Quinn", "Sage", "Rowan", "Emerson", "Skyler"],
}
PRONOUNS = {"Female": "she/her", "Male": "he/him", "Non-binary": "they/them"}
LAST = ["Scott", "Chen", "Patel", "Garcia", "Nguyen", "Okafor", "Kim", "Rossi", "Murphy", "Silva",
        "Haddad", "Novak", "Brooks", "Tanaka", "Reyes", "Walsh", "Mensah", "Larsen", "Ortiz", "Byrne",
        "Cohen", "Ibrahim", "Foster", "Duarte", "Lindqvist", "Moreau", "Sato", "Adeyemi", "Kaur", "Price"]

STUDENT_ROLES = ["Student"] * 8 + ["Student Athlete", "Student Council Member", "Exchange Student"]
STAFF_ROLES = [("Math Teacher", 31, 60), ("English Teacher", 26, 58), ("Science Teacher", 28, 62),
               ("History Teacher", 30, 64), ("Art Teacher", 27, 55), ("PE Teacher", 25, 50),
               ("School Counselor", 30, 58), ("School Nurse", 29, 61), ("Librarian", 35, 66),
               ("Custodian", 24, 63), ("Cafeteria Worker", 22, 60), ("Vice Principal", 38, 60),
               ("Administrative Assistant", 23, 59), ("Teaching Assistant", 22, 35)]

# Phrase banks per disposition cluster. Each persona draws from its own cluster
# and, less often, from a neighbouring one so texts overlap.
BANKS = {
    "runner": {
        "personality_traits": ["quick-thinking", "independent", "restless", "decisive", "self-reliant",
                               "impatient with hesitation", "practical", "athletic"],
        "emotional_disposition": ["Energized by pressure and rarely second-guesses a choice.",
                                  "Gets edgy when boxed in and looks for a way out.",
                                  "Stays alert and acts on instinct before fear sets in."],
        "motivations_goals": ["Wants to stay in control of where they go.",
                              "Values getting out fast over waiting for instructions.",
                              "Hopes to prove they can handle themselves."],
        "communication_style": ["Short and direct, speaks while already moving.",
                                "Blunt; shouts directions rather than discussing them."],
        "knowledge_scope": ["Knows every shortcut and side door in the building.",
                            "Runs cross-country and knows the yards well.",
                            "Remembers the fire-drill routes by heart."],
        "backstory": ["Grew up in a busy city and learned to move through crowds alone.",
                      "Trains for track meets most mornings before class.",
                      "Once led a family out of a smoky apartment hallway."],
    },
    "hider": {
        "personality_traits": ["careful", "observant", "reserved", "patient", "methodical",
                               "quiet", "rule-following", "cautious"],
        "emotional_disposition": ["Calm on the surface, prefers to wait and watch.",
                                  "Anxious in open spaces and seeks cover first.",
                                  "Composed, thinks in terms of safety and stillness."],
        "motivations_goals": ["Wants to keep the people around them safe and quiet.",
                              "Follows the lockdown drill to the letter.",
                              "Prefers staying put until the situation is clear."],
        "communication_style": ["Soft-spoken, often whispers.",
                                "Listens more than talks; gives calm, brief reassurance."],
        "knowledge_scope": ["Knows which closets and storerooms lock from inside.",
                            "Trained in lockdown procedures every semester.",
                            "Familiar with the quiet corners of the library and classrooms."],
        "backstory": ["Has taken part in several lockdown drills and took them seriously.",
                      "Grew up in a household where staying low during storms was routine.",
                      "Volunteers in the library and knows its hidden nooks."],
    },
    "social": {
        "personality_traits": ["friendly", "outgoing", "agreeable", "team-oriented", "talkative"],
        "emotional_disposition": ["Takes cues from the mood of the group.",
                                  "Feels safest surrounded by friends."],
        "motivations_goals": ["Wants to stick with friends no matter what.",
                              "Cares about belonging and looking out for the group."],
        "communication_style": ["Chatty, checks in with everyone nearby.",
                                "Warm and encouraging, likes to say we."],
        "knowledge_scope": ["Knows most students by name.", "Organizes group study sessions."],
        "backstory": ["Captain of a club with many close friends.",
                      "Grew up in a large family where everything was done together."],
    },
    "withdrawn": {
        "personality_traits": ["shy", "sensitive", "withdrawn", "easily startled", "introverted"],
        "emotional_disposition": ["Easily overwhelmed by loud noise and sudden change.",
                                  "Tends to shut down under stress."],
        "motivations_goals": ["Mostly wants to be left alone and unnoticed.",
                              "Struggles to make decisions quickly."],
        "communication_style": ["Barely speaks when nervous.", "Hesitant and uncertain."],
        "knowledge_scope": ["Knows their usual classrooms and little else.",
                            "Rarely pays attention during drills."],
        "backstory": ["Recently moved schools and is still finding their way around.",
                      "Has a history of panic when crowds form."],
    },
    "protector": {
        "personality_traits": ["protective", "commanding", "bold", "confident", "brave"],
        "emotional_disposition": ["Steady under pressure, feels responsible for others.",
                                  "Anger turns into focus in a crisis."],
        "motivations_goals": ["Would step in to protect students at any cost.",
                              "Believes confronting danger can save lives."],
        "communication_style": ["Commanding voice that people obey.",
                                "Gives orders calmly and expects them followed."],
        "knowledge_scope": ["Former military service, trained in self-defense.",
                            "Coaches wrestling and knows physical confrontation."],
        "backstory": ["Served as a volunteer firefighter for years.",
                      "Once stopped a fight in the cafeteria single-handedly."],
    },
}

# Trait centers (risk, sociability, assertiveness, composure, initiative).
CENTERS = {
    "runner": [0.78, 0.22, 0.5, 0.62, 0.8],
    "hider": [0.22, 0.62, 0.38, 0.78, 0.22],
    "social": [0.5, 0.78, 0.25, 0.38, 0.25],
    "withdrawn": [0.2, 0.5, 0.22, 0.2, 0.2],
    "protector": [0.78, 0.5, 0.78, 0.78, 0.62],
}
MIX = ["withdrawn"] * 60 + ["runner"] * 12 + ["hider"] * 6 + ["social"] * 1 + ["protector"] * 1
NEIGHBOR = {"runner": "protector", "hider": "social", "social": "hider", "withdrawn": "hider", "protector": "runner"}


def clamp(x):
    return round(min(1.0, max(0.0, x)), 3)


def sentence_list(rng, words, k):
    picked = rng.sample(words, k)
    return ", ".join(w.capitalize() if i == 0 else w for i, w in enumerate(picked))


def field(rng, cluster, name):
    bank = BANKS[cluster][name]
    other = BANKS[NEIGHBOR[cluster]][name]
    if name == "personality_traits":
        base = sentence_list(rng, bank, 3)
        if rng.random() < 0.3:
            base += ", " + rng.choice(other)
        return base
    parts = [rng.choice(bank)]
    if rng.random() < 0.25:
        parts.append(rng.choice(other))
    return " ".join(parts)


def main():
    rng = random.Random(20240611)
    clusters = MIX[:]
    rng.shuffle(clusters)
    used = set()
    personas = []
    for i, cluster in enumerate(clusters):
        gender = rng.choices(["Female", "Male", "Non-binary"], [0.47, 0.47, 0.06])[0]
        while True:
            name = f"{rng.choice(FIRST[gender])} {rng.choice(LAST)}"
            if name not in used:
                used.add(name)
                break
        if i % 5 == 4:
            role, lo, hi = rng.choice(STAFF_ROLES)
            age = rng.randint(lo, hi)
        else:
            role = rng.choice(STUDENT_ROLES)
            age = rng.randint(14, 18)
        pid = "_".join("".join(c if c.isalnum() else " " for c in name.lower()).split())
        traits = [clamp(c + rng.uniform(-0.1, 0.1)) for c in CENTERS[cluster]]
        personas.append({
            "id": pid,
            "name": name,
            "role": role,
            "age": age,
            "gender": gender,
            "pronouns": PRONOUNS[gender],
            **{f: field(rng, cluster, f) for f in BANKS[cluster]},
            "traits": dict(zip(["risk_tolerance", "sociability", "assertiveness", "composure", "initiative"], traits)),
        })
    OUT.write_text(json.dumps({"personas": personas}, indent=2) + "\n")
    print(f"wrote {len(personas)} personas to {OUT}")


if __name__ == "__main__":
    main()
