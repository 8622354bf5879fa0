# .. note:: warning: "If you modify features, API, or usage, you MUST update the documentation immediately."
import os
import shutil
import subprocess
import sys
import tempfile

SYSTEM_A = """name = "A"
order = 1
coeff.1 = "(t+1)"
coeff.0 = "(t+2)"
domain = [-0.5, 10]
"""


def _run(args, cwd):
    cmd = [sys.executable, "-m", "ltvcommute.cli", *args]
    print(f"$ ltvcommute {' '.join(args)}")
    return subprocess.run(cmd, cwd=cwd, capture_output=True, text=True, env={**os.environ, "LTV_GRID": "51"})


def run_smoke_test():
    workdir = tempfile.mkdtemp(prefix="ltvcommute_smoke_")
    try:
        with open(os.path.join(workdir, "A.sys"), "w", encoding="utf-8") as f:
            f.write(SYSTEM_A)

        print("Synthesizing partners of A...")
        for name, k1, k0, src in (("B", "2", "1", "A.sys"), ("C", "-0.5", "3.5", "B.sys")):
            result = _run(["synth", "first-order", src, "--k1", k1, "--k0", k0, "--name", name, "--out", f"{name}.sys"], workdir)
            if result.returncode != 0:
                print(f"Error: synth {name} failed:\n{result.stderr}")
                sys.exit(1)

        print("Checking the chain A - B - C...")
        result = _run(["transitivity", "A.sys", "B.sys", "C.sys"], workdir)
        if result.returncode != 0 or "transitive=true" not in result.stdout:
            print(f"Error: chain not transitive:\n{result.stdout}{result.stderr}")
            sys.exit(1)
        print("Verified: chain is transitive.")

        print("Running the worked example...")
        result = _run(["demo", "section6", "--out", "section6.txt"], workdir)
        if result.returncode != 0:
            print(f"Error: demo failed:\n{result.stderr}")
            sys.exit(1)
        with open(os.path.join(workdir, "section6.txt"), encoding="utf-8") as f:
            report = f.read()
        if "delta.integral=" not in report:
            print("Error: demo report is incomplete.")
            sys.exit(1)
        print("Demo report written.")
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


if __name__ == "__main__":
    run_smoke_test()
