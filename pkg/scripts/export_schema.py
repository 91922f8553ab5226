"""Write the config JSON schema to docs/config.schema.json."""

import json
from pathlib import Path

from shadowlab.schema import CONFIG_SCHEMA

target = Path(__file__).resolve().parents[1] / "docs" / "config.schema.json"
target.write_text(json.dumps(CONFIG_SCHEMA, indent=2) + "\n", encoding="utf-8")
print(f"wrote {target}")
