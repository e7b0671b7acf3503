from os import getenv
from dotenv import load_dotenv



load_dotenv()

class Var(object):
    SEED = int(getenv('RELENT_SEED', '0'))
    WORD_CAP = int(getenv('RELENT_WORD_CAP', '1000000'))
    CLUMP_KMAX = int(getenv('RELENT_CLUMP_KMAX', '8'))
    TRUNCATION = int(getenv('RELENT_TRUNCATION', '40'))
    RETAINED_MASS = float(getenv('RELENT_RETAINED_MASS', '0.999999'))
    RESTARTS = int(getenv('RELENT_RESTARTS', '16'))
    WORKERS = int(getenv('RELENT_WORKERS', '1'))
    BLOCK_TRIALS = int(getenv('RELENT_BLOCK_TRIALS', '4096'))
    PERRON_TOL = float(getenv('RELENT_PERRON_TOL', '1e-14'))
    PERRON_MAX_ITER = int(getenv('RELENT_PERRON_MAX_ITER', '100000'))
    LOG_LEVEL = str(getenv('RELENT_LOG_LEVEL', 'WARNING')).upper()
    REPORT_FORMAT = str(getenv('RELENT_REPORT_FORMAT', 'json'))
    # reported schema of every JSON/TSV report; bump on any key change
    SCHEMA_VERSION = "1.0.0"
