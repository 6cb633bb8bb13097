"""Writes the synthetic survival/clinical fixture pair used by the CLI tests.

Layout follows the Xena exports: a survival table keyed by `sample` and a
clinical matrix keyed by `sampleID`. Output is deterministic.
"""
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
N_PATIENTS = 260


def main() -> None:
    rng = random.Random(20240607)
    survival_rows = []
    clinical_rows = []
    for i in range(N_PATIENTS):
        sample = f"TCGA-FX-{i:04d}-01"
        male = rng.random() < 0.47
        age = rng.randint(38, 88)
        residual = rng.choices(["R0", "R1", "R2", "RX"], weights=[70, 5, 4, 21])[0]
        hazard = 1.0 / 900.0
        hazard *= math.exp(0.25 * (not male) + 0.02 * (age - 65) + {"R0": 0, "R1": 0.2, "R2": 0.6, "RX": 0.3}[residual])
        death = rng.expovariate(hazard)
        pfi = death * rng.uniform(0.25, 0.95)
        censor = rng.uniform(100, 3000)
        os_time = min(death, censor)
        os_event = int(death <= censor)
        pfi_time = min(pfi, os_time)
        new_tumor = pfi_time + rng.uniform(0, 60) if pfi < censor and rng.random() < 0.6 else None

        os_cell = str(os_event)
        time_cell = str(round(os_time))
        if i % 53 == 7:
            time_cell = "NA"
        if i % 71 == 11:
            os_cell = "unknown"
        if i in (5, 6):
            time_cell = str(round(os_time) + 15000)  # long-tail outliers
        survival_rows.append([sample, f"TCGA-FX-{i:04d}", os_cell, time_cell, str(os_event),
                              str(round(pfi_time)), str(int(pfi_time < os_time or os_event)), str(round(pfi_time))])

        if i % 37 == 3:
            continue  # clinical record absent: dropped by the inner join
        age_cell = "[Not Available]" if i % 29 == 2 else str(age)
        gender_cell = "MALE" if male else "FEMALE"
        residual_cell = "" if i % 41 == 9 else residual
        new_tumor_cell = str(round(new_tumor)) if new_tumor is not None else "[Not Available]"
        clinical_rows.append([sample, gender_cell, age_cell, new_tumor_cell, residual_cell, "",
                              rng.choice(["Stage I", "Stage II", "Stage III"])])

    clinical_rows.append(["TCGA-FX-9999-01", "FEMALE", "60", "", "R0", "", "Stage I"])

    with open(HERE / "fixture_survival.tsv", "w", newline="\n") as f:
        f.write("sample\t_PATIENT\tOS\tOS.time\tDSS\tDSS.time\tPFI\tPFI.time\n")
        for row in survival_rows:
            f.write("\t".join(row) + "\n")
    with open(HERE / "fixture_clinical.tsv", "w", newline="\n") as f:
        f.write("sampleID\tgender\tage_at_initial_pathologic_diagnosis\t"
                "days_to_new_tumor_event_after_initial_treatment\tresidual_tumor\tempty_column\tpathologic_stage\n")
        for row in clinical_rows:
            f.write("\t".join(row) + "\n")


if __name__ == "__main__":
    main()
