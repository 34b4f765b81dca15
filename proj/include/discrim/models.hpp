#ifndef DISCRIM_MODELS_HPP
#define DISCRIM_MODELS_HPP

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "discrim/core.hpp"
#include "discrim/ode.hpp"

namespace discrim::models
{

//! Vx / (K + x)
double mm_eval( double x, double V, double K );
//! Vx / (K + x) + Fx
double modmm_eval( double x, double V, double K, double F );

//! @brief Rate constants and power-law orders of A <-> B -> C
struct KineticsParams
{
  double k1 = 0.7, k2 = 0.2, k3 = 0.1;
  double n1 = 2., n2 = 2., n3 = 1.;
};

//! @brief Initial concentrations and measurement time
struct KineticsInput
{
  double a0 = 0., b0 = 0., c0 = 0.;
  double t = 0.;
};

using Concentrations = std::array<double, 3>;

//! @brief Concentrations [A], [B], [C] at input.t
////////////////////////////////////////////////////////////////////////
//! dA/dt = -k1 A^n1 + k3 B^n3
//! dB/dt =  k1 A^n1 - k2 B^n2 - k3 B^n3
//! dC/dt =  k2 B^n2
//! Power terms use max(c, 0)^n. Throws IntegrationError<3> on step
//! underflow.
////////////////////////////////////////////////////////////////////////
Concentrations integrate_kinetics( KineticsParams const& params, KineticsInput const& input,
                                   IntegratorTol const& tol = {} );

using ParamMap = std::map<std::string, double>;

//! @brief Modified Michaelis-Menten reference against Michaelis-Menten alternative
////////////////////////////////////////////////////////////////////////
//! Keys: V, K, F (reference; defaults 1, 1, 0.1). Alternative parameters
//! (V, K) live in [1e-3, 5]^2 unless overridden by the caller.
////////////////////////////////////////////////////////////////////////
ModelPair make_mm_pair( ParamMap const& params = {} );

//! @brief Partially reversible reference against irreversible alternative (k3 = 0)
////////////////////////////////////////////////////////////////////////
//! Keys: k1, k2, k3, n1, n2, n3 (reference), rtol, atol (integrator).
//! Design point (a0, b0, c0, t); response ([A], [B], [C]).
//! Alternative parameters (k1, k2, n1, n2) in
//! [0.5, 1] x [0.05, 0.5] x [1.5, 3.5] x [1.5, 3].
////////////////////////////////////////////////////////////////////////
ModelPair make_kinetics_pair( ParamMap const& params = {} );

using ModelFactory = std::function<ModelPair( ParamMap const& )>;

//! @brief Name -> model pair factory lookup, preloaded with the bundled models
class Registry
{
public:
  Registry();

  static Registry& global();

  void add( std::string const& name, std::vector<std::string> keys, ModelFactory factory );
  //! @brief Throws InvalidArgument on an unknown name or an unrecognised parameter key
  ModelPair lookup( std::string const& name, ParamMap const& params = {} ) const;
  std::vector<std::string> names() const;

private:
  struct Entry
  {
    std::vector<std::string> keys;
    ModelFactory factory;
  };
  std::map<std::string, Entry> entries_;
};

inline ModelPair registry_lookup( std::string const& name, ParamMap const& params = {} )
{
  return Registry::global().lookup( name, params );
}

} // namespace discrim::models

#endif
