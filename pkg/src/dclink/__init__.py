"""dclink: analysis and simulation of parallel DC-DC converter networks.

Submodules
----------
lti        : polynomial / transfer-function algebra, H-infinity norms,
             balanced truncation
converters : averaged boost/buck dynamics and small-signal blocks
inner      : shaped inner current loop and its explicit controller
outer      : single-converter closed loop, stacked weighted plant, DC bounds
network    : parallel networks, single-converter equivalence, sharing bounds
sim        : nonlinear closed-loop time-domain simulation
scenario   : TOML scenario files
cli        : `dclink run | verify | presets` entry points
"""

__version__ = "0.1.0"
