import sys
from pathlib import Path

# allow `from oracles import ...` and other intra-tests imports
sys.path.insert(0, str(Path(__file__).parent))
