"""Full-length training-progress check at the default desk-scale setup.

Trains the default architecture for 20 epochs on 10,000 examples at
10 dB transmit SNR and asserts the training loss drops at least tenfold
from its pre-training value. This is the slowest single test outside the
acceptance suite (several minutes); everything it shares with the
acceptance training (trainer, architecture, data pipeline) is exercised
faster elsewhere.
"""

from irs_chest.cdrn import CdrnConfig, TrainConfig, train
from irs_chest.channel import SystemConfig
from irs_chest.data import generate_dataset


def test_twenty_epochs_drop_training_loss_tenfold():
    dataset = generate_dataset(SystemConfig(), snr_db=10.0, count=10_000, seed=404)
    result = train(dataset, CdrnConfig(), TrainConfig(epochs=20, seed=11))
    ratio = result.initial_loss / result.train_losses[-1]
    assert ratio >= 10.0, f"training loss only dropped {ratio:.1f}x"
