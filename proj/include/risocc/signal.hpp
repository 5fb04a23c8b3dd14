#pragma once

#include <cmath>
#include <stdexcept>

#include "risocc/channel.hpp"

namespace risocc {

enum class Modulation { Gaussian, Qpsk };

/// Which per-user RIS vectors build the received block: the amplitude-bearing
/// near-field channels g_k, or the phase-only Fresnel responses in A.
enum class ReceiveModel { NearField, PhaseOnly };

struct SymbolBlock {
  CMat S;  // K x T, row k scaled by sqrt(p_k)
};

struct ReceivedBlock {
  CMat Y;  // M x T
  double noise_power = 0.0;

  Eigen::Index antennas() const { return Y.rows(); }
  Eigen::Index snapshots() const { return Y.cols(); }
};

inline SymbolBlock generate_symbols(Eigen::Index users, Eigen::Index snapshots,
                                    const Eigen::VectorXd& powers, Modulation modulation, Rng& rng) {
  if (snapshots < 1) throw std::invalid_argument("symbol block needs at least one snapshot");
  require_dims(powers.size() == users, "powers vs user count");
  for (Eigen::Index k = 0; k < users; ++k) {
    if (!(powers(k) >= 0.0)) throw std::invalid_argument("transmit powers must be non-negative");
  }

  SymbolBlock block{CMat(users, snapshots)};
  std::uniform_int_distribution<int> quadrant{0, 3};
  for (Eigen::Index t = 0; t < snapshots; ++t) {
    for (Eigen::Index k = 0; k < users; ++k) {
      cd s;
      if (modulation == Modulation::Gaussian) {
        s = complex_normal(rng);
      } else {
        s = std::polar(1.0, kPi / 4.0 + kPi / 2.0 * quadrant(rng));
      }
      block.S(k, t) = std::sqrt(powers(k)) * s;
    }
  }
  return block;
}

/// Y = H diag(phase) C S + Z, with C either the g_k columns or A.
inline ReceivedBlock receive(const ChannelSet& ch, const PhaseVector& phase, const SymbolBlock& symbols,
                             Rng& rng, ReceiveModel model = ReceiveModel::NearField) {
  ch.validate();
  const CMat& per_user = model == ReceiveModel::NearField ? ch.g : ch.A;
  require_dims(symbols.S.rows() == per_user.cols(), "symbol rows vs user count");
  const CMat effective = effective_channel(ch.H, phase, per_user);

  ReceivedBlock out{effective * symbols.S, ch.noise_power};
  if (ch.noise_power > 0.0) {
    const double scale = std::sqrt(ch.noise_power);
    for (Eigen::Index t = 0; t < out.Y.cols(); ++t) {
      for (Eigen::Index m = 0; m < out.Y.rows(); ++m) out.Y(m, t) += scale * complex_normal(rng);
    }
  }
  return out;
}

}  // namespace risocc
