from pathlib import Path

from dotenv import load_dotenv

# PETZLAB_* variables must be in the environment before settings are imported
load_dotenv(Path(__file__).resolve().parent.parent / '.env')
