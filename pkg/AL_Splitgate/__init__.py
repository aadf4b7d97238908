""" AL_Splitgate

    Leakage auditing for image-classification datasets: manifests from dataset trees, leakage-safe
    (per-subject/per-volume) splits and fold plans, overlap and duplicate audits, the generalized
    MCC metric suite, the random-label leakage probe, and a synthetic benchmark reproducing
    the inflation caused by per-image splitting.
"""
from AL_Splitgate.Config import VERSION as __version__
from AL_Splitgate.Errors import *
from AL_Splitgate.Random import *
from AL_Splitgate.Images import *
from AL_Splitgate.Ingest import *
from AL_Splitgate.HashDup import *
from AL_Splitgate.Splitter import *
from AL_Splitgate.Metrics import *
from AL_Splitgate.LeakStats import *
from AL_Splitgate.SynthBench import *
from AL_Splitgate.Workbooks import *
