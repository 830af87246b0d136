"""Synthetic body-measurement data shaped like an NHANES demographics/examination join.

Columns: Age, Gender, Waist, Arm, Leg, Race, BMI. Measurements are rounded to
0.1 and a small share of cells is left blank. BMI rises with age (directly
and through waist circumference), so labeling that favours younger people
biases the labeled-only mean downward.

Generating law, with F = 1 for Gender == "Female" and e_* independent normals::

    Age   ~ integer Uniform{18, ..., 80}
    Waist = 78 + 0.25 Age - 4 F + race_waist[Race] + N(0, 12^2)
    Arm   = 31 + 0.12 (Waist - 95) - 1.5 F + N(0, 2.5^2)
    Leg   = 40 - 2.5 F - 0.03 (Age - 45) + N(0, 3^2)
    BMI   = -5 + 0.30 Waist + 0.35 Arm - 0.12 Leg + 0.02 Age + 0.8 F
            + race_bmi[Race] + N(0, 2^2)
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

FIXTURE_SEED = 2014
FIXTURE_ROWS = 6000
MISSING_RATE = 0.02

RACES = ("MexicanAmerican", "OtherHispanic", "White", "Black", "Other")
RACE_PROBS = (0.16, 0.10, 0.38, 0.22, 0.14)
RACE_WAIST = {"MexicanAmerican": 2.0, "OtherHispanic": 1.0, "White": 0.0, "Black": -1.0, "Other": -5.0}
RACE_BMI = {"MexicanAmerican": 0.4, "OtherHispanic": 0.2, "White": 0.0, "Black": 1.2, "Other": -0.9}

NHANES_COLUMNS = ("Age", "Gender", "Waist", "Arm", "Leg", "Race", "BMI")


def generate_nhanes_like(n_rows: int = FIXTURE_ROWS, seed: int = FIXTURE_SEED, missing_rate: float = MISSING_RATE):
    """Return ``(frame, truth)`` where truth is the BMI mean over complete rows."""
    rng = np.random.default_rng(seed)
    age = rng.integers(18, 81, n_rows)
    female = rng.random(n_rows) < 0.5
    race = rng.choice(np.array(RACES), size=n_rows, p=RACE_PROBS)
    f = female.astype(float)
    race_waist = np.array([RACE_WAIST[r] for r in race])
    race_bmi = np.array([RACE_BMI[r] for r in race])
    waist = 78 + 0.25 * age - 4.0 * f + race_waist + rng.normal(0.0, 12.0, n_rows)
    arm = 31 + 0.12 * (waist - 95) - 1.5 * f + rng.normal(0.0, 2.5, n_rows)
    leg = 40 - 2.5 * f - 0.03 * (age - 45) + rng.normal(0.0, 3.0, n_rows)
    bmi = -5 + 0.30 * waist + 0.35 * arm - 0.12 * leg + 0.02 * age + 0.8 * f + race_bmi + rng.normal(0.0, 2.0, n_rows)
    frame = pd.DataFrame(
        {
            "Age": age,
            "Gender": np.where(female, "Female", "Male"),
            "Waist": np.round(waist, 1),
            "Arm": np.round(arm, 1),
            "Leg": np.round(leg, 1),
            "Race": race,
            "BMI": np.round(bmi, 1),
        }
    )
    for col in ("Waist", "Arm", "Leg", "BMI"):
        blank = rng.random(n_rows) < missing_rate
        frame[col] = frame[col].mask(blank)
    truth = float(frame.dropna()["BMI"].mean())
    return frame, truth


def write_fixture(path, n_rows: int = FIXTURE_ROWS, seed: int = FIXTURE_SEED) -> float:
    """Write the CSV plus a ``.json`` sidecar holding the truth; returns the truth."""
    path = Path(path)
    frame, truth = generate_nhanes_like(n_rows, seed)
    frame.to_csv(path, index=False)
    meta = {"rows": n_rows, "seed": seed, "outcome": "BMI", "truth": truth}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
    return truth


def bundled_fixture() -> tuple[Path, float]:
    """Path of the packaged fixture CSV and its stored truth."""
    base = resources.files("ppi_ipw") / "data"
    csv_path = Path(str(base / "nhanes_like.csv"))
    meta = json.loads((base / "nhanes_like.json").read_text())
    return csv_path, float(meta["truth"])
