import json
import os
import pathlib
import shutil

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCHEMAS = ROOT / "schemas"
BASE = "https://uiactions.local/schemas/"


def _registry():
    resources = []
    for path in SCHEMAS.glob("*.schema.json"):
        doc = json.loads(path.read_text())
        resources.append((BASE + path.name, Resource.from_contents(doc)))
    return Registry().with_resources(resources)


REGISTRY = _registry()


def validate(doc, schema_name):
    schema = json.loads((SCHEMAS / f"{schema_name}.schema.json").read_text())
    Draft202012Validator(schema, registry=REGISTRY).validate(doc)


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("UIACTIONS_CLI") or shutil.which("uiactions")
    if not path:
        candidate = ROOT / "build" / "uiactions"
        path = str(candidate) if candidate.exists() else None
    if not path:
        pytest.skip("uiactions CLI not found; set UIACTIONS_CLI")
    return path
