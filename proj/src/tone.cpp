#include "provisim/tone.hpp"

#include <sstream>

namespace provisim {

std::string describe(const ToneCurve& curve) {
  std::ostringstream out;
  if (const auto* g = std::get_if<GammaCurve<double>>(&curve)) {
    out << "gamma(" << g->gamma << ")";
  } else {
    const auto& s = std::get<SigmoidCurve<double>>(curve);
    out << "sigmoid(gain=" << s.gain << ", shift=" << s.shift << ")";
  }
  return out.str();
}

}  // namespace provisim
