# Habibullin counterexample verification
# Exact hypothesis certificates and error-bounded conclusion enclosures for q, h and S

from .config import VERSION, configure_precision, load_settings

__version__ = VERSION

try:
    configure_precision(load_settings().precision_mode)
except ValueError:
    # main() reports the bad environment; fall back so the import still works
    configure_precision("standard")
