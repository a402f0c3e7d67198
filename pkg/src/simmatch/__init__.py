"""
# simmatch
Provides regularized similarity matching: exact offline solvers, online
Hebbian/anti-Hebbian networks with adaptive rank, and the experiments around them.

## Usage
### Solve offline problems
Three regularizers shrink the input spectrum in different ways: `scale` subtracts a
fixed threshold αT, `io` subtracts a threshold proportional to the total input energy,
and `squared` shrinks the leading eigenvalues jointly.
```py
>>> import simmatch as sm
>>> sm.run_offline([6, 5, 4], 3, 1.0, "squared")
2.25 1.25 0.25 (rank 3)
>>> sm.run_offline([5, 1], 2, 2.0, "scale")
3 0 (rank 1)
```

### Run an online network
```py
>>> stream = sm.ColoredStream(sm.StreamSchedule(64, sm.SpectrumSpec((6, 5, 4, 2), 60, (0, 0.2))))
>>> cfg = sm.NetworkConfig(n=64, k=4, alpha=2.0, kind="scale")
>>> log = sm.run_stream(cfg, (stream.next_sample(t) for t in range(10000)), window=1000)
>>> log.records[-1].output_spectrum  # close to (4, 3, 2, 0)
```
Each sample runs the neural dynamics to a fixed point, then applies local learning
rules. A discount factor `beta < 1` makes the network forget with time scale
`-1/ln(beta)`, so it can follow non-stationary inputs.

### Analyse two-level spectra
```py
>>> case = sm.DegenerateCase(a=1.0, b=0.5, n1=2, n2=3)
>>> str(sm.alpha_range(case, "io"))
'[0.142857142857, 0.285714285714)'
>>> sm.top_output_eigenvalue(case, "squared", 0.5)
0.5
```

### Command line
```sh
$ simmatch offline --kind squared --spectrum 6,5,4 --alpha 1 --k 3
2.25 1.25 0.25 (rank 3)
$ simmatch experiment --scenario nonstationary --out-dir out --plot
$ simmatch phase --out-dir out
$ simmatch config stationary my-experiment.yaml
$ simmatch experiment --config my-experiment.yaml --seed 7
```
Every command is deterministic given its config and seed. Results are csv files with
12 significant digits; experiment csv files start with `# key: value` lines recording
how they were produced.

## See Also
### NumPy
* https://numpy.org/

### Click
* https://click.palletsprojects.com/

## License
This project falls under the BSD 3-Clause License.

"""

import lazyr

lazyr.VERBOSE = 0
lazyr.register("yaml")
lazyr.register(".plotting")

# pylint: disable=wrong-import-position
from . import (
    analysis,
    config,
    core,
    datagen,
    metrics,
    offline,
    online,
    plotting,
    reader,
    saver,
    spectral,
)
from ._version import __version__
from .analysis import *
from .config import *
from .core import *
from .datagen import *
from .metrics import *
from .offline import *
from .online import *
from .reader import *
from .saver import *
from .spectral import *

__all__: list[str] = ["plotting"]
__all__.extend(spectral.__all__)
__all__.extend(datagen.__all__)
__all__.extend(offline.__all__)
__all__.extend(online.__all__)
__all__.extend(metrics.__all__)
__all__.extend(analysis.__all__)
__all__.extend(config.__all__)
__all__.extend(reader.__all__)
__all__.extend(saver.__all__)
__all__.extend(core.__all__)
