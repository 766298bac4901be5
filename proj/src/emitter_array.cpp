#include <cmath>
#include <stdexcept>
#include <string>

#include "qrect/types.hpp"

namespace qrect {

void EmitterArray::validate() const {
  if (phases.empty()) throw std::invalid_argument("n_emitters must be at least 1");
  if (phases.size() > 10) throw std::invalid_argument("n_emitters must be at most 10 (dense 4^N generator)");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("gamma must be positive and finite");
  }
  if (detunings.size() != phases.size()) {
    throw std::invalid_argument("detunings has " + std::to_string(detunings.size()) +
                                " entries but there are " + std::to_string(phases.size()) +
                                " emitters");
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (!std::isfinite(phases[i]) || !std::isfinite(detunings[i])) {
      throw std::invalid_argument("phases and detunings must be finite");
    }
    if (i > 0 && !(phases[i] > phases[i - 1])) {
      throw std::invalid_argument("phases must be distinct and increasing along the channel");
    }
  }
}

EmitterArray EmitterArray::mirrored() const {
  EmitterArray m{gamma, {}, {}};
  const std::size_t n = phases.size();
  m.phases.resize(n);
  m.detunings.resize(n);
  if (n == 0) return m;
  const double span = phases.front() + phases.back();
  for (std::size_t i = 0; i < n; ++i) {
    m.phases[i] = span - phases[n - 1 - i];
    m.detunings[i] = detunings[n - 1 - i];
  }
  return m;
}

EmitterArray EmitterArray::pair(double kl, double delta1, double delta2, double gamma) {
  return EmitterArray{gamma, {0.0, kl}, {delta1, delta2}};
}

}  // namespace qrect
