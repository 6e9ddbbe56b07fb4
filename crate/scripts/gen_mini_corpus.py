"""Generate the synthetic 200-record incident-narrative corpus in data/.

The records are template-built, not real investigation reports.
Run: python3 scripts/gen_mini_corpus.py > data/mini_corpus.jsonl
"""
import json
import random

THEMES = {
    "fuel": [
        "The engine lost power during cruise flight due to fuel starvation.",
        "The pilot reported that the fuel selector was positioned to an empty tank.",
        "Examination revealed the fuel tanks were empty and no fuel was found in the carburetor.",
        "The engine sputtered and quit after the pilot switched fuel tanks.",
        "Fuel exhaustion resulted in a total loss of engine power.",
        "The pilot did not visually check the fuel quantity during the preflight inspection.",
    ],
    "gear": [
        "The landing gear collapsed during the landing roll.",
        "The pilot failed to extend the landing gear before touchdown.",
        "The right main landing gear actuator fractured due to fatigue cracking.",
        "The gear warning horn did not sound and the airplane landed gear up.",
        "Maintenance records showed the nose gear strut was overdue for inspection.",
        "The landing gear retracted after touchdown and the propeller struck the runway.",
    ],
    "runway": [
        "The airplane veered off the runway during a crosswind landing.",
        "The pilot lost directional control and the airplane departed the runway surface.",
        "A gusting crosswind pushed the airplane toward the runway edge lights.",
        "The airplane overran the end of the runway and came to rest in a ditch.",
        "The runway was wet and braking action was reported as poor.",
        "The tailwheel airplane ground looped after touchdown on the runway.",
    ],
    "rotor": [
        "The helicopter main rotor blades struck the tail boom during the landing.",
        "The helicopter experienced a loss of tail rotor effectiveness while hovering.",
        "The tail rotor drive shaft separated and the helicopter began to spin.",
        "The main rotor speed decayed during the autorotation to a field.",
        "The helicopter rotor system contacted power lines during the approach.",
        "The pilot lifted the helicopter into a hover and the rotor blade hit a tree.",
    ],
    "weather": [
        "The pilot continued visual flight into instrument meteorological conditions.",
        "Structural icing accumulated on the wings during the climb through clouds.",
        "The weather briefing forecast low ceilings and reduced visibility in fog.",
        "Thunderstorms and heavy rain were reported near the destination airport.",
        "The pilot encountered severe turbulence and a strong downdraft near the mountains.",
        "Spatial disorientation in low visibility led to a loss of control.",
    ],
    "bird": [
        "The airplane struck a flock of birds shortly after takeoff.",
        "A bird strike shattered the windshield and injured the pilot.",
        "Bird remains were found inside the engine inlet and fan blades.",
        "Several geese were ingested into the engine during the initial climb.",
        "The pilot observed birds near the runway before the takeoff roll.",
    ],
    "training": [
        "The student pilot was practicing touch and go landings with an instructor.",
        "The flight instructor did not take control in time to prevent the hard landing.",
        "The student pilot bounced the airplane several times during the solo flight.",
        "The instructor demonstrated a power off stall and the airplane entered a spin.",
        "The student reported that the airplane porpoised after the flare.",
    ],
    "electrical": [
        "The alternator failed and the battery voltage dropped during the night flight.",
        "An electrical fire produced smoke in the cockpit and the pilot declared an emergency.",
        "The circuit breaker for the avionics tripped and the radios became inoperative.",
        "A chafed wire behind the instrument panel caused an electrical short.",
        "The pilot lost all electrical power and the navigation lights failed.",
    ],
}

AIRCRAFT = ["Cessna 172", "Piper PA-28", "Beech A36", "Robinson R44", "Bell 206",
            "Cirrus SR22", "Mooney M20", "Boeing 737", "Air Tractor AT-502"]
PHASES = ["during the approach", "after takeoff", "while taxiing", "in cruise",
          "during the initial climb", "on final approach"]


def narrative(rng, idx):
    themes = list(THEMES)
    main = rng.choice(themes)
    second = rng.choice(themes) if rng.random() < 0.3 else None
    parts = [f"On the day of the accident, the {rng.choice(AIRCRAFT)} was operated "
             f"{rng.choice(PHASES)} at {rng.randint(1000, 9500)} feet."]
    picks = rng.sample(THEMES[main], k=min(len(THEMES[main]), rng.randint(3, 5)))
    parts.extend(picks)
    if second:
        parts.extend(rng.sample(THEMES[second], k=rng.randint(1, 2)))
    if rng.random() < 0.1:
        parts.append(f"See https://data.example.org/report/{idx} for the docket.")
    if rng.random() < 0.1:
        parts.append("<p>The airplane was <b>substantially</b> damaged.</p>")
    body = parts[1:]
    rng.shuffle(body)
    return " ".join(parts[:1] + body)


def main():
    rng = random.Random(7)
    for i in range(200):
        year = 2008 + i % 15
        rec = {
            "id": f"MINI{i:04d}",
            "narrative": narrative(rng, i),
            "date": f"{year}-{1 + i % 12:02d}-{1 + i % 28:02d}",
        }
        print(json.dumps(rec, sort_keys=True))


if __name__ == "__main__":
    main()
