"""Two-step question retrieval: sparse first stage, dense re-ranking."""

from .cascade import CascadeConfig, CascadeResult, retrieve, retrieve_batch
from .corpus import EvalQuestion, QAPair, load_eval_set, load_qa_corpus
from .encoder import EncoderParams, embed, embed_corpus, featurize, init_params, sim
from .dense import mips_full, mips_restricted
from .sparse import SparseIndex, build_sparse_index, sparse_search
from .supervision import Strategy, TrainingExample, build_examples
from .textnorm import exact_match, normalize, token_f1
from .training import TrainConfig, contrastive_loss, loss_and_grad, train

__version__ = "0.1.0"
