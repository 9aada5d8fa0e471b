"""Reference statistics for the Granger and ADF unit tests.

Runs statsmodels on 20 fixed seeded datasets and stores the series together
with the statistics and the BIC-selected VAR order in tests/fixtures/granger_reference.json. The C++ suite
recomputes everything from the stored series.
"""

import json
import pathlib
import warnings

import numpy as np
from statsmodels.tsa.api import VAR
from statsmodels.tsa.stattools import adfuller, grangercausalitytests

warnings.filterwarnings("ignore")

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "granger_reference.json"


def dataset(seed):
    rng = np.random.default_rng(1000 + seed)
    T = int(rng.integers(50, 201))
    kind = ["noise", "ar", "driven", "walk"][seed % 4]
    cause = rng.uniform(-1, 1, T)
    if kind == "noise":
        effect = rng.normal(size=T)
    elif kind == "ar":
        effect = np.zeros(T)
        e = rng.normal(size=T)
        for t in range(1, T):
            effect[t] = 0.6 * effect[t - 1] + e[t]
    elif kind == "driven":
        effect = np.zeros(T)
        e = 0.5 * rng.normal(size=T)
        for t in range(2, T):
            effect[t] = 0.4 * effect[t - 1] - 0.2 * effect[t - 2] + 0.8 * cause[t - 1] + e[t]
    else:
        effect = np.cumsum(rng.normal(size=T))
    return kind, cause, effect


def main():
    cases = []
    for seed in range(20):
        kind, cause, effect = dataset(seed)
        lags = {}
        res = grangercausalitytests(np.column_stack([effect, cause]), maxlag=4, verbose=False)
        for lag in range(1, 5):
            f, p, df_den, df_num = res[lag][0]["ssr_ftest"]
            lags[str(lag)] = {"f": f, "p": p, "df_den": int(df_den), "df_num": int(df_num)}
        ics = VAR(np.column_stack([effect, cause])).select_order(5).ics["bic"]
        var_lag = 1 + int(np.argmin(ics[1:]))
        adf = {}
        for name, series in (("cause", cause), ("effect", effect)):
            stat, p, used, nobs, crit, _ = adfuller(series, regression="c", autolag="AIC")
            adf[name] = {
                "statistic": stat,
                "p": p,
                "used_lag": int(used),
                "nobs": int(nobs),
                "crit": [crit["1%"], crit["5%"], crit["10%"]],
            }
        cases.append({
            "seed": seed,
            "kind": kind,
            "cause": cause.tolist(),
            "effect": effect.tolist(),
            "granger": lags,
            "var_bic_lag": var_lag,
            "adf": adf,
        })
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"generator": "statsmodels", "cases": cases}, indent=1) + "\n")


if __name__ == "__main__":
    main()
