#!/usr/bin/env python3
"""Reference computations for the six ground-truth pitfall cases.

Each function recomputes the expected answer from the raw fixture CSVs
with plain loops (no dataframes, no SQL) and writes it as a truth CSV
under tests/fixtures/truth/. Nulls are written as \\N so the harness can
tell them apart from empty strings.
"""
import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))
SPIDER = os.path.join(HERE, "..", "fixtures", "spider")
TRUTH = os.path.join(HERE, "..", "fixtures", "truth")

NULL = "\\N"


def read(path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    return [dict(zip(rows[0], r)) for r in rows[1:]]


def write(name, header, rows):
    os.makedirs(TRUTH, exist_ok=True)
    with open(os.path.join(TRUTH, name), "w", newline="", encoding="utf-8") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def fmt(v):
    """Mirror the engine's number rendering: integers plain, else %.12g."""
    if v is None:
        return NULL
    if float(v) == 0:
        return "0"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return "%.12g" % v


def distinct_pet():
    """Item 1: first name and age of students who have a pet, deduplicated."""
    students = read(os.path.join(SPIDER, "student.csv"))
    pets = read(os.path.join(SPIDER, "has_pet.csv"))
    seen, rows = set(), []
    for s in students:
        for p in pets:
            if p["StuID"] == s["StuID"]:
                key = (s["Fname"], s["Age"])
                if key not in seen:
                    seen.add(key)
                    rows.append([s["Fname"], s["Age"]])
    write("r1_distinct_pet.csv", ["Fname", "Age"], rows)


def null_mean():
    """Item 2: per-zip average August temperature, nulls excluded."""
    weather = read(os.path.join(SPIDER, "weather.csv"))
    zips, sums, counts = [], {}, {}
    for w in weather:
        if not w["date"].startswith("8/"):
            continue
        z = w["zip_code"]
        if z not in sums:
            zips.append(z)
            sums[z], counts[z] = 0.0, 0
        if w["mean_temperature_f"] != "":
            sums[z] += float(w["mean_temperature_f"])
            counts[z] += 1
    rows = []
    for z in zips:
        mean = None if counts[z] == 0 else sums[z] / counts[z]
        rows.append([z, fmt(mean)])
    write("r2_null_mean.csv", ["zip_code", "mean_temp"], rows)


def heme_except():
    """Item 3: medicines that cannot interact with enzymes producing Heme."""
    medicine = read(os.path.join(SPIDER, "medicine.csv"))
    enzyme = read(os.path.join(SPIDER, "enzyme.csv"))
    inter = read(os.path.join(SPIDER, "medicine_enzyme_interaction.csv"))
    heme_enzymes = {e["id"] for e in enzyme if e["product"] == "Heme"}
    interacting = {i["medicine_id"] for i in inter if i["enzyme_id"] in heme_enzymes}
    rows, seen = [], set()
    for m in medicine:
        key = (m["name"], m["trade_name"])
        if m["id"] not in interacting and key not in seen:
            seen.add(key)
            rows.append([m["name"], m["trade_name"]])
    write("r3_except.csv", ["name", "trade_name"], rows)


def makers_models():
    """Item 6: maker display names (not ids) next to their models."""
    makers = read(os.path.join(os.path.join(HERE, "..", "fixtures", "cars"),
                               "car_makers.csv"))
    models = read(os.path.join(SPIDER, "model_list.csv"))
    rows = []
    for mo in models:
        for ma in makers:
            if mo["Maker"] == ma["Id"]:
                rows.append([ma["Maker"], mo["Model"]])
    write("r6_makers_models.csv", ["Maker", "Model"], rows)


def horsepower_count():
    """Item 5: count of cars with horsepower > 150, parsing text cells."""
    cars = read(os.path.join(SPIDER, "cars_data.csv"))
    n = 0
    for c in cars:
        try:
            if float(c["horsepower"]) > 150:
                n += 1
        except ValueError:
            pass
    write("r5_horsepower.csv", ["count(*)"], [[fmt(float(n))]])


def tied_years():
    """Item 7: years with the most concerts, ties included."""
    concerts = read(os.path.join(SPIDER, "concert.csv"))
    years, counts = [], {}
    for c in concerts:
        y = c["Year"]
        if y not in counts:
            years.append(y)
            counts[y] = 0
        counts[y] += 1
    top = max(counts.values())
    rows = [[y, fmt(float(counts[y]))] for y in years if counts[y] == top]
    write("r7_tied_years.csv", ["Year", "count(*)"], rows)


def figure1():
    import subprocess, sys
    out = subprocess.run(
        [sys.executable, os.path.join(HERE, "figure1_oracle.py")],
        check=True, capture_output=True, text=True).stdout
    os.makedirs(TRUTH, exist_ok=True)
    with open(os.path.join(TRUTH, "figure1.csv"), "w", encoding="utf-8") as f:
        f.write(out)


if __name__ == "__main__":
    distinct_pet()
    null_mean()
    heme_except()
    makers_models()
    horsepower_count()
    tied_years()
    figure1()
    print("truth CSVs written to", os.path.normpath(TRUTH))
