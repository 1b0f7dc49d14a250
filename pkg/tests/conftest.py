import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("dscjscc", max_examples=25, deadline=None)
settings.load_profile("dscjscc")
