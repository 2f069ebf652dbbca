"""Signal-level simulation: modulation, device and channel effects, bounded noise.

The feature model is one (phase, power) pair per transmitted symbol and 16
symbols per sample, so a full sample carries 32 features. Every transmission
can be observed twice -- once at the service provider and once at the
eavesdropping adversary -- through two different static links with
independent noise draws.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi

SYMBOLS_PER_SAMPLE = 16
FEATURES_PER_SAMPLE = 2 * SYMBOLS_PER_SAMPLE


class Modulation(str, enum.Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"


class Receiver(str, enum.Enum):
    PROVIDER = "provider"
    ADVERSARY = "adversary"


# Gray-mapped QPSK constellation anchored at 00 -> pi/4.
QPSK_GRAY_PHASES = {
    (0, 0): math.pi / 4,
    (0, 1): 3 * math.pi / 4,
    (1, 1): 5 * math.pi / 4,
    (1, 0): 7 * math.pi / 4,
}
BPSK_PHASES = {0: 0.0, 1: math.pi}

BITS_PER_SYMBOL = {Modulation.BPSK: 1, Modulation.QPSK: 2}


def wrap_phase(x):
    """Wrap an angle (scalar or array) into [0, 2*pi)."""
    return np.mod(x, TWO_PI)


def circular_distance(a, b):
    """Shortest angular distance between two wrapped phases."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class DeviceProfile:
    """A transmitter: intrinsic phase shift, power, modulation, authorization."""

    id: int
    phase_shift_rad: float
    transmit_power: float
    modulation: Modulation
    authorized: bool

    def __post_init__(self):
        if not self.transmit_power > 0:
            raise InvalidInputError(f"transmit_power must be > 0, got {self.transmit_power}")
        object.__setattr__(self, "phase_shift_rad", float(wrap_phase(self.phase_shift_rad)))
        object.__setattr__(self, "modulation", Modulation(self.modulation))


@dataclass(frozen=True)
class ChannelLink:
    """Static per-(tx, rx) channel: linear power gain and phase offset."""

    tx_id: int
    rx_id: Receiver
    gain: float
    phase_offset_rad: float

    def __post_init__(self):
        if self.gain < 0:
            raise InvalidInputError(f"channel gain must be >= 0, got {self.gain}")
        object.__setattr__(self, "phase_offset_rad", float(wrap_phase(self.phase_offset_rad)))
        object.__setattr__(self, "rx_id", Receiver(self.rx_id))


@dataclass(frozen=True)
class NoiseModel:
    """Bounded observation noise, uniform per feature in [-bound, +bound]."""

    phase_bound_rad: float = 0.1
    power_bound: float = 1.0
    noise_floor: float = 1.0

    def __post_init__(self):
        if self.phase_bound_rad < 0 or self.power_bound < 0:
            raise InvalidInputError("noise bounds must be >= 0")
        if not self.noise_floor > 0:
            raise InvalidInputError("noise floor must be > 0")


@dataclass(frozen=True)
class SignalSample:
    """One received observation: per-symbol phases and powers plus metadata."""

    phases: np.ndarray
    powers: np.ndarray
    class_label: int
    tx_id: int
    member: bool
    view: Receiver

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if phases.ndim != 1 or phases.shape != powers.shape or phases.size == 0:
            raise InvalidInputError("phases and powers must be equal-length 1-D vectors")
        if self.class_label not in (0, 1):
            raise InvalidInputError(f"class_label must be 0 or 1, got {self.class_label}")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "view", Receiver(self.view))

    def features(self) -> np.ndarray:
        """All features in wire order: phases then powers."""
        return np.concatenate([self.phases, self.powers])


@dataclass(frozen=True)
class PairedObservation:
    """Provider and adversary views of one transmitted bit sequence."""

    provider_view: SignalSample
    adversary_view: SignalSample

    def __post_init__(self):
        p, a = self.provider_view, self.adversary_view
        if p.view is not Receiver.PROVIDER or a.view is not Receiver.ADVERSARY:
            raise InvalidInputError("paired observation views must be (provider, adversary)")
        if p.tx_id != a.tx_id or p.class_label != a.class_label:
            raise InvalidInputError("paired views must share tx_id and class_label")


def modulate(bits, scheme: Modulation) -> np.ndarray:
    """Map a bit sequence to per-symbol base phases.

    BPSK consumes one bit per symbol (0 -> 0, 1 -> pi); QPSK consumes two
    bits per symbol with the Gray map 00 -> pi/4, 01 -> 3pi/4, 11 -> 5pi/4,
    10 -> 7pi/4.
    """
    scheme = Modulation(scheme)
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise InvalidInputError("bits must be 0 or 1")
    if len(bits) == 0:
        raise InvalidInputError("empty bit sequence")
    if scheme is Modulation.BPSK:
        return np.array([BPSK_PHASES[b] for b in bits], dtype=float)
    if len(bits) % 2 != 0:
        raise InvalidInputError("QPSK requires an even number of bits")
    pairs = zip(bits[0::2], bits[1::2])
    return np.array([QPSK_GRAY_PHASES[p] for p in pairs], dtype=float)


def propagate(
    base_phases,
    device: DeviceProfile,
    link: ChannelLink,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> SignalSample:
    """Apply device and channel effects plus bounded noise to base phases.

    phase_k = wrap(base_k + device phase + link phase + U[-e_phi, e_phi])
    power_k = max(0, gain * transmit_power + U[-e_p, e_p])
    """
    if link.tx_id != device.id:
        raise InvalidInputError(f"link tx_id {link.tx_id} does not match device id {device.id}")
    base = np.asarray(base_phases, dtype=float)
    n = base.size
    phase_noise = rng.uniform(-noise.phase_bound_rad, noise.phase_bound_rad, size=n)
    power_noise = rng.uniform(-noise.power_bound, noise.power_bound, size=n)
    phases = wrap_phase(base + device.phase_shift_rad + link.phase_offset_rad + phase_noise)
    powers = np.maximum(0.0, link.gain * device.transmit_power + power_noise)
    return SignalSample(
        phases=phases,
        powers=powers,
        class_label=1 if device.authorized else 0,
        tx_id=device.id,
        member=False,
        view=link.rx_id,
    )


def transmit_paired(
    device: DeviceProfile,
    provider_link: ChannelLink,
    adversary_link: ChannelLink,
    bits,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> PairedObservation:
    """Modulate once, then observe through both links with independent noise."""
    if provider_link.tx_id != device.id or adversary_link.tx_id != device.id:
        raise InvalidInputError("both links must carry the transmitting device id")
    base = modulate(bits, device.modulation)
    provider_view = propagate(base, device, provider_link, noise, rng)
    adversary_view = propagate(base, device, adversary_link, noise, rng)
    return PairedObservation(provider_view=provider_view, adversary_view=adversary_view)


def snr_to_received_power(snr_db: float, noise_floor: float) -> float:
    """Received power g*p that realizes the given SNR over the noise floor."""
    if not noise_floor > 0:
        raise InvalidInputError(f"noise floor must be > 0, got {noise_floor}")
    return noise_floor * 10.0 ** (snr_db / 10.0)


def mark_member(sample: SignalSample, member: bool = True) -> SignalSample:
    """Copy of a sample with its membership ground-truth flag set."""
    return replace(sample, member=member)


def mark_member_pair(pair: PairedObservation, member: bool = True) -> PairedObservation:
    return PairedObservation(
        provider_view=mark_member(pair.provider_view, member),
        adversary_view=mark_member(pair.adversary_view, member),
    )
