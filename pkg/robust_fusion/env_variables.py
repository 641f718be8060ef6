import os

from dotenv import load_dotenv

load_dotenv()

ROBUST_FUSION_CAP = int(os.getenv("ROBUST_FUSION_CAP", "100000"))  # composite signals per LP
ROBUST_FUSION_POWER_CAP = int(os.getenv("ROBUST_FUSION_POWER_CAP", "100000"))
ROBUST_FUSION_T_MAX = int(os.getenv("ROBUST_FUSION_T_MAX", "64"))
ROBUST_FUSION_ORACLE_CAP = int(os.getenv("ROBUST_FUSION_ORACLE_CAP", "4096"))

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
