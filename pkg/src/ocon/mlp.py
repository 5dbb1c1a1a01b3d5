"""From-scratch MLP: forward, backprop, dropout, batch-norm, Adam/RMSProp.

Single sigmoid output node trained with binary cross-entropy (mean squared
error is available behind the ``loss="mse"`` flag for ablation).  Hidden
layers run affine -> batch-norm (optional) -> ReLU -> inverted dropout.
Everything is float64 numpy; a fixed seed gives a bitwise-reproducible run.

Dropout rates are *keep* probabilities (0.8 input / 0.5 hidden in the tuned
setup) and surviving activations are scaled by 1/keep at train time, so
inference needs no rescaling.  Batch-norm normalizes with batch statistics in
train mode while updating running statistics (momentum 0.1, biased variance)
used verbatim in infer mode.
"""

from dataclasses import dataclass

import numpy as np

from . import container
from .errors import DimensionMismatch, NonFiniteLoss
from .util import sha256_json

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
RMSPROP_DECAY = 0.9
OPT_EPS = 1e-8
BN_EPS = 1e-5
BN_MOMENTUM = 0.1

CHECKPOINT_KIND = "mlp_checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    """Architecture plus learning hyperparameters for one binary classifier."""

    input_dim: int
    hidden_layers: tuple = (100,)
    activation: str = "relu"
    dropout_keep_input: float = 1.0
    dropout_keep_hidden: float = 1.0
    batch_norm: bool = False
    l2_lambda: float = 0.0
    optimizer: str = "adam"
    learning_rate: float = 1e-4
    batch_size: int = 32
    seed: int = 0
    loss: str = "bce"

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.input_dim < 1 or any(w < 1 for w in self.hidden_layers):
            raise ValueError("layer widths must be >= 1")
        if not 0 < self.dropout_keep_input <= 1 or not 0 < self.dropout_keep_hidden <= 1:
            raise ValueError("keep probabilities must be in (0, 1]")
        if self.learning_rate < 0:
            raise ValueError("learning rate must not be negative")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.optimizer not in ("adam", "rmsprop"):
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")
        if self.loss not in ("bce", "mse"):
            raise ValueError(f"unsupported loss {self.loss!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @classmethod
    def tuned(cls, input_dim, seed=0):
        """The search-selected one-class setup: 1x100 hidden, Adam at 1e-4,
        keep 0.8/0.5 dropout, batch-norm, L2 1e-4, batches of 32."""
        return cls(input_dim=input_dim, hidden_layers=(100,),
                   dropout_keep_input=0.8, dropout_keep_hidden=0.5,
                   batch_norm=True, l2_lambda=1e-4, optimizer="adam",
                   learning_rate=1e-4, batch_size=32, seed=seed)

    @property
    def layer_dims(self):
        return (self.input_dim, *self.hidden_layers, 1)

    def to_dict(self):
        return {
            "input_dim": self.input_dim, "hidden_layers": list(self.hidden_layers),
            "activation": self.activation,
            "dropout_keep_input": self.dropout_keep_input,
            "dropout_keep_hidden": self.dropout_keep_hidden,
            "batch_norm": self.batch_norm, "l2_lambda": self.l2_lambda,
            "optimizer": self.optimizer, "learning_rate": self.learning_rate,
            "batch_size": self.batch_size, "seed": self.seed, "loss": self.loss,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["hidden_layers"] = tuple(d["hidden_layers"])
        return cls(**d)


@dataclass
class MlpParams:
    """Weights, biases, batch-norm state, and optimizer accumulators."""

    weights: list                 # W[l] has shape (fan_out, fan_in)
    biases: list
    gamma: list                   # per hidden layer; empty when batch-norm off
    beta: list
    running_mean: list
    running_var: list
    opt_m: list                   # aligned with trainables()
    opt_v: list
    step: int = 0

    def trainables(self):
        """Parameter arrays the optimizer updates, in fixed order."""
        return self.weights + self.biases + self.gamma + self.beta

    def copy(self):
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            gamma=[g.copy() for g in self.gamma],
            beta=[b.copy() for b in self.beta],
            running_mean=[m.copy() for m in self.running_mean],
            running_var=[v.copy() for v in self.running_var],
            opt_m=[m.copy() for m in self.opt_m],
            opt_v=[v.copy() for v in self.opt_v],
            step=self.step,
        )

    def allclose(self, other, **kw):
        mine, theirs = self.trainables(), other.trainables()
        return len(mine) == len(theirs) and all(
            np.allclose(a, b, **kw) for a, b in zip(mine, theirs))


def init_params(config):
    """Kaiming-He normal weights (std sqrt(2/fan_in)), zero biases, unit
    batch-norm scale; deterministic for a given config seed."""
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    gamma, beta, r_mean, r_var = [], [], [], []
    if config.batch_norm:
        for width in config.hidden_layers:
            gamma.append(np.ones(width))
            beta.append(np.zeros(width))
            r_mean.append(np.zeros(width))
            r_var.append(np.ones(width))
    trainables = weights + biases + gamma + beta
    return MlpParams(
        weights=weights, biases=biases, gamma=gamma, beta=beta,
        running_mean=r_mean, running_var=r_var,
        opt_m=[np.zeros_like(t) for t in trainables],
        opt_v=[np.zeros_like(t) for t in trainables],
    )


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_per_sample(zout, y):
    """Numerically stable per-sample binary cross-entropy from pre-sigmoid
    values: softplus(z) - y*z."""
    return np.maximum(zout, 0.0) + np.log1p(np.exp(-np.abs(zout))) - y * zout


@dataclass
class ForwardCache:
    """Intermediate values needed by backpropagation."""

    x_in: np.ndarray              # batch after input dropout
    layer_inputs: list            # input to each hidden affine
    z: list                       # hidden affine outputs
    zhat: list                    # batch-norm normalized (None entries when off)
    mu: list
    var: list
    relu_in: list                 # what ReLU saw (bn output or z)
    drop_masks: list              # inverted-dropout masks (None when off)
    out_input: np.ndarray         # input to the output affine
    zout: np.ndarray              # pre-sigmoid output, shape (B,)
    probs: np.ndarray
    mode: str


def forward(params, config, batch, mode="infer", rng=None):
    """Run the network on a (B, d) batch.

    Train mode applies dropout (requires ``rng``) and batch statistics,
    updating the running batch-norm estimates in place; infer mode uses the
    running statistics and no dropout.  Returns (probabilities, cache).
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != config.input_dim:
        raise DimensionMismatch(f"batch width {x.shape[1]} != input dim {config.input_dim}")
    train = mode == "train"
    if train and rng is None and (config.dropout_keep_input < 1 or config.dropout_keep_hidden < 1):
        raise ValueError("train-mode forward with dropout needs an rng")

    if train and config.dropout_keep_input < 1:
        keep = config.dropout_keep_input
        x = x * (rng.random(x.shape) < keep) / keep

    cache = ForwardCache(x_in=x, layer_inputs=[], z=[], zhat=[], mu=[], var=[],
                         relu_in=[], drop_masks=[], out_input=None,
                         zout=None, probs=None, mode=mode)
    a = x
    n_hidden = len(config.hidden_layers)
    for l in range(n_hidden):
        cache.layer_inputs.append(a)
        z = a @ params.weights[l].T + params.biases[l]
        cache.z.append(z)
        if config.batch_norm:
            if train:
                mu = z.mean(axis=0)
                var = z.var(axis=0)
                params.running_mean[l] *= 1.0 - BN_MOMENTUM
                params.running_mean[l] += BN_MOMENTUM * mu
                params.running_var[l] *= 1.0 - BN_MOMENTUM
                params.running_var[l] += BN_MOMENTUM * var
            else:
                mu = params.running_mean[l]
                var = params.running_var[l]
            zhat = (z - mu) / np.sqrt(var + BN_EPS)
            pre_act = params.gamma[l] * zhat + params.beta[l]
            cache.zhat.append(zhat)
            cache.mu.append(mu)
            cache.var.append(var)
        else:
            pre_act = z
            cache.zhat.append(None)
            cache.mu.append(None)
            cache.var.append(None)
        cache.relu_in.append(pre_act)
        a = np.maximum(pre_act, 0.0)
        if train and config.dropout_keep_hidden < 1:
            keep = config.dropout_keep_hidden
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
            cache.drop_masks.append(mask)
        else:
            cache.drop_masks.append(None)

    cache.out_input = a
    zout = (a @ params.weights[-1].T + params.biases[-1]).ravel()
    cache.zout = zout
    cache.probs = sigmoid(zout)
    return cache.probs, cache


@dataclass
class MlpGrads:
    """Gradients aligned with ``MlpParams.trainables()`` order."""

    weights: list
    biases: list
    gamma: list
    beta: list

    def trainables(self):
        return self.weights + self.biases + self.gamma + self.beta


def _backward(params, config, cache, y):
    b = len(y)
    p = cache.probs
    if config.loss == "bce":
        g = (p - y) / b
    else:
        g = 2.0 * (p - y) * p * (1.0 - p) / b
    g = g[:, None]

    lam = config.l2_lambda
    n_hidden = len(config.hidden_layers)
    d_weights = [None] * (n_hidden + 1)
    d_biases = [None] * (n_hidden + 1)
    d_gamma = [np.zeros_like(gm) for gm in params.gamma]
    d_beta = [np.zeros_like(bt) for bt in params.beta]

    d_weights[-1] = g.T @ cache.out_input + lam * params.weights[-1]
    d_biases[-1] = g.sum(axis=0)
    da = g @ params.weights[-1]

    for l in range(n_hidden - 1, -1, -1):
        if cache.drop_masks[l] is not None:
            da = da * cache.drop_masks[l]
        d_pre = da * (cache.relu_in[l] > 0)
        if config.batch_norm:
            zhat = cache.zhat[l]
            d_gamma[l] = (d_pre * zhat).sum(axis=0)
            d_beta[l] = d_pre.sum(axis=0)
            dzhat = d_pre * params.gamma[l]
            inv_std = 1.0 / np.sqrt(cache.var[l] + BN_EPS)
            dz = (inv_std / b) * (
                b * dzhat - dzhat.sum(axis=0) - zhat * (dzhat * zhat).sum(axis=0))
        else:
            dz = d_pre
        d_weights[l] = dz.T @ cache.layer_inputs[l] + lam * params.weights[l]
        d_biases[l] = dz.sum(axis=0)
        da = dz @ params.weights[l]

    return MlpGrads(weights=d_weights, biases=d_biases, gamma=d_gamma, beta=d_beta)


def _l2_penalty(params, lam):
    if lam == 0:
        return 0.0
    return 0.5 * lam * sum(float(np.sum(w * w)) for w in params.weights)


def loss_and_grads(params, config, batch, labels, rng=None, mode="train",
                   return_per_sample=False):
    """Mean loss (data term plus L2 weight penalty) and its gradients.

    The L2 term covers weight matrices only, never biases or batch-norm
    scale/shift.  Raises NonFiniteLoss when the loss diverges.
    """
    y = np.asarray(labels, dtype=np.float64).ravel()
    probs, cache = forward(params, config, batch, mode=mode, rng=rng)
    if len(y) != len(probs):
        raise DimensionMismatch("labels length != batch size")
    if config.loss == "bce":
        per_sample = bce_per_sample(cache.zout, y)
    else:
        per_sample = (probs - y) ** 2
    loss = float(per_sample.mean()) + _l2_penalty(params, config.l2_lambda)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss became {loss}")
    grads = _backward(params, config, cache, y)
    if return_per_sample:
        return loss, grads, per_sample
    return loss, grads


def optimizer_step(params, grads, config):
    """One in-place Adam (bias-corrected) or RMSProp update."""
    params.step += 1
    t = params.step
    lr = config.learning_rate
    targets = params.trainables()
    g_list = grads.trainables()
    if config.optimizer == "adam":
        c1 = 1.0 - ADAM_BETA1 ** t
        c2 = 1.0 - ADAM_BETA2 ** t
        for p, g, m, v in zip(targets, g_list, params.opt_m, params.opt_v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            p -= lr * (m / c1) / (np.sqrt(v / c2) + OPT_EPS)
    else:
        for p, g, v in zip(targets, g_list, params.opt_v):
            v *= RMSPROP_DECAY
            v += (1.0 - RMSPROP_DECAY) * (g * g)
            p -= lr * g / (np.sqrt(v) + OPT_EPS)
    return params


def predict_proba(params, config, batch):
    probs, _ = forward(params, config, batch, mode="infer")
    return probs


def binary_accuracy(params, config, batch, labels, threshold=0.5):
    """Percent of samples whose thresholded probability matches the label."""
    probs = predict_proba(params, config, batch)
    predicted = probs >= threshold
    return 100.0 * float(np.mean(predicted == (np.asarray(labels) == 1)))


@dataclass
class MlpModel:
    """Trained parameters together with the config that produced them."""

    config: MlpConfig
    params: MlpParams
    scaling_hash: str = ""
    manifest_hash: str = ""

    def predict_proba(self, batch):
        return predict_proba(self.params, self.config, batch)


def _param_arrays(params, config):
    arrays = {}
    for i, w in enumerate(params.weights):
        arrays[f"w{i}"] = w
    for i, b in enumerate(params.biases):
        arrays[f"b{i}"] = b
    for i in range(len(params.gamma)):
        arrays[f"gamma{i}"] = params.gamma[i]
        arrays[f"beta{i}"] = params.beta[i]
        arrays[f"rmean{i}"] = params.running_mean[i]
        arrays[f"rvar{i}"] = params.running_var[i]
    for i, (m, v) in enumerate(zip(params.opt_m, params.opt_v)):
        arrays[f"m{i}"] = m
        arrays[f"v{i}"] = v
    return arrays


def save_model(model, path):
    """Versioned binary checkpoint; round-trips bit-exactly."""
    meta = {
        "config": model.config.to_dict(),
        "step": model.params.step,
        "scaling_hash": model.scaling_hash,
        "manifest_hash": model.manifest_hash,
    }
    container.write_container(path, CHECKPOINT_KIND, CHECKPOINT_VERSION,
                              meta, _param_arrays(model.params, model.config))


def load_model(path):
    _, meta, arrays = container.read_container(path, CHECKPOINT_KIND, CHECKPOINT_VERSION)
    config = MlpConfig.from_dict(meta["config"])
    n_layers = len(config.hidden_layers) + 1
    n_bn = len(config.hidden_layers) if config.batch_norm else 0
    n_train = 2 * n_layers + 2 * n_bn
    params = MlpParams(
        weights=[arrays[f"w{i}"] for i in range(n_layers)],
        biases=[arrays[f"b{i}"] for i in range(n_layers)],
        gamma=[arrays[f"gamma{i}"] for i in range(n_bn)],
        beta=[arrays[f"beta{i}"] for i in range(n_bn)],
        running_mean=[arrays[f"rmean{i}"] for i in range(n_bn)],
        running_var=[arrays[f"rvar{i}"] for i in range(n_bn)],
        opt_m=[arrays[f"m{i}"] for i in range(n_train)],
        opt_v=[arrays[f"v{i}"] for i in range(n_train)],
        step=meta["step"],
    )
    return MlpModel(config=config, params=params,
                    scaling_hash=meta["scaling_hash"],
                    manifest_hash=meta["manifest_hash"])


def config_hash(config):
    return sha256_json(config.to_dict())
