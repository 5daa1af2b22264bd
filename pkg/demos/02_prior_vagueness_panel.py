"""Walkthrough: how the statistic dodges the vague-prior Bayes-factor collapse.

The normal-mean kit is fully closed-form.  Sweeping the prior variance shows
2 log BF10 diving to -infinity while T settles at Wald + 1; the panel at the
end regenerates the reference table from the Wald row alone.
"""

import numpy as np

from bayeschi.harness import run_table1
from bayeschi.normal_mean import (
    NormalMeanSetup,
    closed_form_2logBF,
    closed_form_T,
    closed_form_wald,
    lindley_limit_check,
)

setup = NormalMeanSetup(n=100, ybar=0.111, sigma2=1.0, mu0=0.0, tau2=1.0)
print(f"n = {setup.n}, ybar = {setup.ybar}, Wald = {closed_form_wald(setup):.4f}")
print(f"{'tau2':>10}  {'T':>9}  {'2logBF':>10}")
table = lindley_limit_check(setup, np.logspace(-2, 50, 14))
for tau2, t_val, bf in zip(table["tau2"], table["T"], table["two_log_bf"]):
    print(f"{tau2:>10.1e}  {t_val:>9.4f}  {bf:>10.2f}")
print("T -> Wald + 1 while the Bayes factor 'supports' H0 no matter the data.\n")

print("Reference panel regenerated from closed forms (flagged if off by > 0.02):")
print(f"{'prior':<12}{'n':>6}  {'stat':<8}{'value':>10}{'printed':>10}  ok")
for row in run_table1():
    print(
        f"{row.prior:<12}{row.n:>6}  {row.statistic:<8}{row.value:>10.2f}"
        f"{row.reference:>10.2f}  {'yes' if row.ok else 'NO'}"
    )
print("(the single flagged cell is a known arithmetic slip in the printed table)")
