"""Run a small verification manifest and read back the reports.

Run with ``python3 demos/04_verification_suite.py``.  The shipped acceptance
manifest is run with ``orliczlab verify acceptance`` instead.
"""
from orliczlab.harness.suite import run_suite

MANIFEST = """
[suite]
name = demo

[lorentz]
check = theorem1
instance = dirac
cells = 16, 32
level = 100
q = 1.1
s = inf

[morrey]
check = theorem2
instance = dirac
cells = 16, 32
level = 100
q = 1.1
theta = 2.5

[out-of-range]
check = theorem1
instance = dirac
cells = 16, 32
level = 100
q = 1.3
"""

res = run_suite(MANIFEST)
print(res.text)
# the last section asks for q outside (1, 6/5], so the suite exits with status 1
print("exit code:", res.exit_code)
