"""Test corpora.

``enwik8_style(n)`` returns the first ``n`` bytes of enwik8 when
``$DCTLM_DATA_DIR/enwik8`` exists.  Otherwise it assembles English prose with
light markup from the documentation text shipped with the Python standard
library, deterministically, so the smoke tests run offline.
"""
import ast
import os
import sysconfig
from pathlib import Path


def _stdlib_text():
    import pydoc_data.topics as topics

    for key in sorted(topics.topics):
        yield f"<page>\n<title>{key}</title>\n<text>\n{topics.topics[key]}\n</text>\n</page>\n"
    root = Path(sysconfig.get_paths()["stdlib"])
    for path in sorted(root.glob("*.py")):
        try:
            tree = ast.parse(path.read_text(encoding="utf-8"))
        except (SyntaxError, UnicodeDecodeError):
            continue
        for node in ast.walk(tree):
            if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef)):
                doc = ast.get_docstring(node)
                if doc and len(doc) > 200:
                    name = getattr(node, "name", path.stem)
                    yield f"<page>\n<title>{name}</title>\n<text>\n{doc}\n</text>\n</page>\n"


def enwik8_style(n: int) -> bytes:
    data_dir = os.environ.get("DCTLM_DATA_DIR")
    if data_dir and (Path(data_dir) / "enwik8").exists():
        with open(Path(data_dir) / "enwik8", "rb") as fh:
            return fh.read(n)
    out = bytearray()
    for chunk in _stdlib_text():
        out += chunk.encode("utf-8")
        if len(out) >= n:
            break
    return bytes(out[:n])
