"""Render every test figure into a scratch directory and parse each one
with a strict XML parser."""
import os
import subprocess
import sys
import tempfile
import xml.etree.ElementTree as ET

SVG_NS = "{http://www.w3.org/2000/svg}svg"


def main():
    binary = sys.argv[1]
    with tempfile.TemporaryDirectory() as out:
        env = dict(os.environ, SWARMLEARN_SVG_DIR=out)
        subprocess.run([binary], check=True, env=env, stdout=subprocess.DEVNULL)
        files = sorted(f for f in os.listdir(out) if f.endswith(".svg"))
        if len(files) < 10:
            print(f"expected at least 10 figures, found {len(files)}")
            return 1
        bad = 0
        for name in files:
            try:
                root = ET.parse(os.path.join(out, name)).getroot()
                if root.tag != SVG_NS:
                    raise ValueError(f"root element is {root.tag}")
            except (ET.ParseError, ValueError) as e:
                print(f"{name}: {e}")
                bad += 1
        print(f"{len(files) - bad}/{len(files)} figures are well-formed SVG")
        return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
