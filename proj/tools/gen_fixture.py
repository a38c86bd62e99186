#!/usr/bin/env python3
"""Regenerates the bundled synthetic fixture under data/fixture/.

The panel is built so that the stationarity transforms recover a known
factor-plus-tax-shock process: two AR(1) factors load on every series, and
the six VAR observables respond contemporaneously to narrative tax rate
changes with the benchmark sign pattern (a cut raises GDP, consumption,
investment, income and prices and lowers unemployment). Levels are then
integrated per each series' transform code so that applying the codes
returns the stationary process.
"""

import csv
import os

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "fixture")

FIRST_YEAR, FIRST_Q = 1958, 3  # two pre-sample rows; transforms drop them
T_RAW = 242                    # 1958-Q3 .. 2018-Q4 -> 240 after transforms

EVENTS = [
    # quarter, type, liability change, base, label, exogenous
    ("1962-Q3", "CIT", -2.4, 55.0, "Investment Incentive Act of 1962", 1),
    ("1964-Q2", "PIT", -8.4, 410.0, "Revenue Act of 1964", 1),
    ("1966-Q1", "CIT", 3.1, 78.0, "Suspension of Investment Credit", 0),
    ("1971-Q3", "PIT", -5.2, 740.0, "Revenue Act of 1971", 1),
    ("1975-Q2", "PIT", -14.8, 1100.0, "Tax Reduction Act of 1975", 1),
    ("1978-Q4", "CIT", -6.5, 205.0, "Revenue Act of 1978", 1),
    ("1981-Q4", "PIT", -28.3, 2300.0, "Economic Recovery Tax Act of 1981", 1),
    ("1982-Q3", "CIT", 9.2, 240.0, "Tax Equity and Fiscal Responsibility Act", 1),
    ("1986-Q4", "PIT", -19.7, 3400.0, "Tax Reform Act of 1986", 1),
    ("1987-Q2", "CIT", 11.4, 310.0, "Tax Reform Act of 1986, corporate phase", 1),
    ("1993-Q3", "PIT", 21.6, 5100.0, "Omnibus Budget Reconciliation Act of 1993", 1),
    ("2003-Q3", "PIT", -35.0, 8800.0, "Jobs and Growth Tax Relief Act of 2003", 1),
    ("2003-Q3", "CIT", -9.8, 780.0, "Jobs and Growth Tax Relief Act of 2003", 1),
    ("2011-Q1", "PIT", -67.239, 12000.0,
     "Tax Relief, Unemployment Insurance Reauthorization, and Job Creation Act", 1),
    ("2013-Q1", "PIT", 3.4, 13000.0, "Affordable Care Act provisions", 1),
    ("2013-Q1", "CIT", 0.6, 1800.0, "Affordable Care Act provisions", 1),
    ("2018-Q1", "PIT", -65.0, 15500.0, "Tax Cuts and Jobs Act of 2017", 1),
    ("2018-Q1", "CIT", -94.0, 2100.0, "Tax Cuts and Jobs Act of 2017", 1),
]


def quarter_index(qstr):
    y, q = qstr.split("-Q")
    return int(y) * 4 + int(q) - 1


def quarter_str(idx):
    return f"{idx // 4:04d}-Q{idx % 4 + 1}"


def main():
    rng = np.random.default_rng(910)
    base_idx = FIRST_YEAR * 4 + FIRST_Q - 1
    dates = [quarter_str(base_idx + i) for i in range(T_RAW)]

    # Narrative rates on the raw grid (events sit inside the transformed range).
    pit_rate = np.zeros(T_RAW)
    cit_rate = np.zeros(T_RAW)
    for q, typ, liab, base, _, exo in EVENTS:
        if not exo:
            continue
        i = quarter_index(q) - base_idx
        rate = 100.0 * liab / base
        if typ == "PIT":
            pit_rate[i] += rate
        else:
            cit_rate[i] += rate

    # Two persistent AR(1) factors (innovations scaled to keep unit-ish
    # variance); persistence makes the smoothed trend MLE interior.
    f = np.zeros((T_RAW, 2))
    for t in range(1, T_RAW):
        f[t, 0] = 0.90 * f[t - 1, 0] + 0.55 * rng.normal()
        f[t, 1] = 0.85 * f[t - 1, 1] + 0.65 * rng.normal()

    # Stationary (transformed-scale) processes for the 12 series.
    # Observables respond to tax cuts with the benchmark sign pattern.
    #           GDP   PCE   INV  UNEMP  DPI   CPI
    beta_pit = [1.4, 1.1, 2.4, -0.8, 1.2, 0.9]
    beta_cit = [0.9, 0.6, 1.8, -0.5, 0.8, 1.0]
    lam = {
        "GDP": (0.50, 0.15), "PCE": (0.40, 0.10), "INV": (0.55, -0.25),
        "UNEMP": (-0.45, 0.20), "DPI": (0.40, 0.05), "CPI": (0.15, 0.45),
        "IPI": (0.60, -0.10), "EMP": (0.55, 0.15), "HOURS": (0.35, 0.30),
        "SP500": (0.25, -0.40), "FEDPIT": (0.05, 0.02), "FEDCIT": (0.03, 0.04),
    }
    obs_names = ["GDP", "PCE", "INV", "UNEMP", "DPI", "CPI"]
    others = ["IPI", "EMP", "HOURS", "SP500", "FEDPIT", "FEDCIT"]

    x = {}
    cut = {"PIT": -pit_rate, "CIT": -cit_rate}  # positive = cut
    # Observables load the factors with one lag, so their contemporaneous
    # innovations are spanned by the tax terms plus idiosyncratic noise
    # and the cut direction is identifiable from the covariance alone.
    for k, name in enumerate(obs_names):
        s = np.zeros(T_RAW)
        for t in range(1, T_RAW):
            s[t] = (0.68 * s[t - 1] + 0.40 * lam[name][0] * f[t - 1, 0]
                    + 0.40 * lam[name][1] * f[t - 1, 1]
                    + beta_pit[k] * cut["PIT"][t] + beta_cit[k] * cut["CIT"][t]
                    + 0.25 * rng.normal())
        x[name] = s
    for name in ["IPI", "EMP", "HOURS", "SP500"]:
        s = np.zeros(T_RAW)
        for t in range(1, T_RAW):
            s[t] = (0.35 * s[t - 1] + 0.65 * lam[name][0] * f[t, 0]
                    + 0.65 * lam[name][1] * f[t, 1]
                    + 0.25 * cut["PIT"][t] + 0.15 * cut["CIT"][t]
                    + 0.40 * rng.normal())
        x[name] = s
    # Federal rate changes respond to lagged activity (so the federal
    # columns fail the Granger exogeneity test, unlike the narrative ones).
    for name, driver in [("FEDPIT", "GDP"), ("FEDCIT", "INV")]:
        s = np.zeros(T_RAW)
        for t in range(1, T_RAW):
            s[t] = (0.30 * s[t - 1] + 0.55 * x[driver][t - 1]
                    + 0.20 * lam[name][0] * f[t, 0] + 0.25 * rng.normal())
        x[name] = s

    # Integrate to levels per transform code.
    tcode = {"GDP": 5, "PCE": 5, "INV": 5, "UNEMP": 1, "DPI": 5, "CPI": 5,
             "IPI": 6, "EMP": 5, "HOURS": 2, "SP500": 7, "FEDPIT": 2, "FEDCIT": 2}
    group = {"GDP": "NIPA", "PCE": "NIPA", "INV": "NIPA", "UNEMP": "Labor",
             "DPI": "NIPA", "CPI": "Prices", "IPI": "IP", "EMP": "Labor",
             "HOURS": "Labor", "SP500": "Stocks", "FEDPIT": "Tax", "FEDCIT": "Tax"}
    levels = {}
    for name, s in x.items():
        code = tcode[name]
        if code == 1:
            levels[name] = 6.0 + s
        elif code == 2:
            levels[name] = 50.0 + np.cumsum(s)
        elif code == 5:
            levels[name] = 100.0 * np.exp(np.cumsum(0.01 * s))
        elif code == 6:
            dlog = np.cumsum(0.005 * s)
            levels[name] = 100.0 * np.exp(np.cumsum(0.002 + 0.01 * dlog))
        elif code == 7:
            growth = 0.01 + 0.004 * s
            lev = np.empty(T_RAW)
            lev[0] = 100.0
            for t in range(1, T_RAW):
                lev[t] = lev[t - 1] * (1.0 + growth[t])
            levels[name] = lev
        else:
            raise ValueError(code)

    os.makedirs(OUT, exist_ok=True)
    names = obs_names + others
    with open(os.path.join(OUT, "panel_fixture.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date"] + names)
        w.writerow(["tcode"] + [tcode[n] for n in names])
        w.writerow(["group"] + [group[n] for n in names])
        for i in range(T_RAW):
            w.writerow([dates[i]] + [f"{levels[n][i]:.8f}" for n in names])

    with open(os.path.join(OUT, "narrative_events.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quarter", "tax_type", "liability_change", "base_prev",
                    "act_label", "exogenous"])
        for row in EVENTS:
            w.writerow(row)

    print(f"wrote {len(names)}-series panel ({T_RAW} rows) and "
          f"{len(EVENTS)} events to {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
