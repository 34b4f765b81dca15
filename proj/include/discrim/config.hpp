#ifndef DISCRIM_CONFIG_HPP
#define DISCRIM_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "discrim/algorithms.hpp"
#include "discrim/core.hpp"
#include "discrim/global_search.hpp"
#include "discrim/models.hpp"

namespace discrim
{

//! @brief Config file problem; the message names the line or the offending field
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm
{
  two_adapt,
  disc,
  vdm
};

Algorithm parse_algorithm( std::string const& name );
std::string algorithm_name( Algorithm a );

//! @brief Everything needed to run one solve, read from a JSON config file
struct ProblemConfig
{
  std::string model_name;
  models::ParamMap reference_params;
  std::optional<ParameterSpace> parameter_space;
  DesignSpace design_space = DesignSpace::box( { 0. }, { 1. } );
  Design initial_design;
  Algorithm algorithm = Algorithm::two_adapt;
  std::vector<Vector> theta_disc0;
  GlobalSearchConfig global;
  std::filesystem::path output_directory = "out";
  bool emit_psi_curve = false;
  int psi_grid = 501;

  //! @brief Registry lookup plus the parameter-space override
  ModelPair model_pair() const;
  //! @brief AlgoParams for algorithm a: defaults for a, then the config overrides
  //! (VDM takes max_iter and lambda only from vdm_max_iter and vdm_lambda)
  AlgoParams params( Algorithm a ) const;

  //! overrides from the algorithm section; unset fields keep the per-algorithm default
  std::optional<double> eps, lambda, eps_sip, vdm_lambda;
  std::optional<int> max_iter, n_theta_starts, max_iter_sip, max_sip_tightenings, vdm_max_iter;
  std::optional<LpMethod> lp_method;
  std::optional<VdmStep> vdm_step;
};

ProblemConfig parse_config( std::string const& text, std::string const& source = "<string>" );
ProblemConfig load_config( std::filesystem::path const& path );

} // namespace discrim

#endif
