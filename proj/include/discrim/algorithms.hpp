#ifndef DISCRIM_ALGORITHMS_HPP
#define DISCRIM_ALGORITHMS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "discrim/core.hpp"
#include "discrim/global_search.hpp"
#include "discrim/lp.hpp"
#include "discrim/lsq.hpp"

namespace discrim
{

enum class VdmStep
{
  harmonic,    //!< alpha_k = 1 / (k + 2)
  line_search  //!< golden-section search on alpha, refitting theta at each trial
};

struct AlgoParams
{
  double eps = 1e-5;
  int max_iter = 100;
  int n_theta_starts = 9;
  double lambda = 1e-8;
  double eps_sip = 1e-5;
  int max_iter_sip = 20;
  LpMethod lp_method = LpMethod::interior_point;
  VdmStep vdm_step = VdmStep::harmonic;
  //! times eps_sip is divided by 10 when the search returns an existing candidate
  int max_sip_tightenings = 8;

  //! @brief Defaults with the VDM exceptions (max_iter 1000, lambda 0)
  static AlgoParams vdm_defaults();
  void validate() const;
};

struct IterationRecord
{
  enum class Kind
  {
    outer,
    inner
  };
  Kind kind = Kind::outer;
  int iteration = 0;        //!< outer iteration index
  int inner_iteration = -1; //!< DISC-MD iteration, -1 on outer rows
  double t_value = 0.;      //!< T(xi, theta_hat)
  double t_lp = 0.;         //!< LP value (inner rows), NaN otherwise
  double accuracy = 0.;     //!< outer: max_psi; inner: t_lp - t_value
  double min_support_gap = 0.;
  std::size_t n_theta = 0;
  std::size_t n_candidates = 0;
  double wall_seconds = 0.;  //!< since the start of the solve
  double lp_seconds = 0.;
  double ls_seconds = 0.;
  double global_seconds = 0.;
};

enum class SolveStatus
{
  converged,
  max_iter,
  stalled,
  error
};

struct SolveResult
{
  Design design;
  Vector theta_hat;
  double t_value = 0.;
  double accuracy = 0.;  //!< max_psi of the final verification scan
  double min_support_gap = 0.;
  int iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::error;
  std::string message;
  std::vector<IterationRecord> history;
};

//! @brief Linear semi-infinite program handed to the Blankenship & Falk engine
////////////////////////////////////////////////////////////////////////
//! upper_solver solves the program restricted to a finite index list;
//! lower_solver returns the index minimising constraint(x, .) over the
//! whole index set. Feasibility of x means constraint(x, y) >= 0.
////////////////////////////////////////////////////////////////////////
template <class Decision, class Index>
struct LsipProblem
{
  std::function<Decision( std::vector<Index> const& )> upper_solver;
  std::function<Index( Decision const& )> lower_solver;
  std::function<double( Decision const&, Index const& )> constraint;
  std::vector<Index> initial_indices;
};

template <class Decision, class Index>
struct BfResult
{
  Decision x;
  std::vector<Index> indices;
  bool converged = false;
  int iterations = 0;
  double violation = 0.;  //!< constraint(x, y) at the last lower-level solution
};

//! @brief Blankenship & Falk cutting-plane iteration
////////////////////////////////////////////////////////////////////////
//! on_iteration(k, x, y, g) is called after each lower-level solve.
//! Solver exceptions propagate to the caller.
////////////////////////////////////////////////////////////////////////
template <class Decision, class Index>
BfResult<Decision, Index>
blankenship_falk( LsipProblem<Decision, Index> const& problem, double tol, int max_iter,
                  std::function<void( int, Decision const&, Index const&, double )> const& on_iteration = {} )
{
  if( !( tol > 0. ) || max_iter < 1 ) throw InvalidArgument( "blankenship_falk needs tol > 0 and max_iter >= 1" );
  if( problem.initial_indices.empty() ) throw InvalidArgument( "blankenship_falk needs at least one initial index" );
  BfResult<Decision, Index> res;
  res.indices = problem.initial_indices;
  for( int k = 0; k < max_iter; ++k ){
    res.x = problem.upper_solver( res.indices );
    Index y = problem.lower_solver( res.x );
    double const g = problem.constraint( res.x, y );
    res.iterations = k + 1;
    res.violation = g;
    if( on_iteration ) on_iteration( k, res.x, y, g );
    if( g >= -tol ){
      res.converged = true;
      break;
    }
    res.indices.push_back( std::move( y ) );
  }
  return res;
}

//! @brief Cache of phi(candidate_i, theta_j) for append-only candidate and parameter lists
class PhiTable
{
public:
  explicit PhiTable( ModelPair const& pair ) : pair_( &pair ) {}

  //! @brief Brings the table up to date; recomputes from scratch if either list is not an extension
  void sync( std::vector<DesignPoint> const& candidates, std::vector<Vector> const& thetas );
  //! @brief phi for the lists of the last sync
  Eigen::MatrixXd const& matrix() const { return phi_; }

private:
  ModelPair const* pair_;
  std::vector<DesignPoint> candidates_;
  std::vector<Vector> thetas_;
  Eigen::MatrixXd phi_;
};

struct DiscResult
{
  Design design;                 //!< pruned
  Vector candidate_weights;      //!< LP weights over all candidates
  std::vector<Vector> theta_disc;
  FitResult fit;                 //!< fit at the final weights
  double t_lp = 0.;
  bool converged = false;
  int iterations = 0;
  std::vector<IterationRecord> history;  //!< inner rows, iteration field left at 0
};

//! @brief Optimal weights on a fixed candidate set by alternating weight LP and parameter fits
DiscResult disc_md( ModelPair const& pair, std::vector<DesignPoint> const& candidates, Design const& initial,
                    std::vector<Vector> theta_disc, AlgoParams const& params, PhiTable* cache = nullptr );

//! @brief Adaptive discretization of both the design space and the parameter space
SolveResult two_adapt_md( ModelPair const& pair, DesignSpace const& space, Design const& initial,
                          std::vector<Vector> theta_disc0, AlgoParams const& params,
                          GlobalSearchConfig const& gcfg = {} );

//! @brief DISC-MD on a fixed discretisation of the space (full lattice, or box_grid of a box)
SolveResult solve_disc( ModelPair const& pair, DesignSpace const& space, Design const& initial,
                        std::vector<Vector> theta_disc0, AlgoParams const& params,
                        GlobalSearchConfig const& gcfg = {} );

//! @brief Vector direction method
SolveResult vdm( ModelPair const& pair, DesignSpace const& space, Design const& initial, AlgoParams const& params,
                 GlobalSearchConfig const& gcfg = {} );

struct OptimalityReport
{
  double max_psi = 0.;          //!< max_x phi(x, theta_hat) - T(xi, theta_hat)
  double min_support_gap = 0.;  //!< min over the support of phi(x_i, theta_hat) - T(xi, theta_hat)
  DesignPoint worst_point;
  double t_value = 0.;

  bool optimal( double eps ) const { return min_support_gap <= eps && max_psi <= eps; }
};

//! @brief Equivalence-theorem check of a design with a fitted parameter
OptimalityReport check_optimality( ModelPair const& pair, Design const& design, std::span<double const> theta_hat,
                                   DesignSpace const& space, GlobalSearchConfig const& gcfg = {} );

std::string to_string( SolveStatus s );

} // namespace discrim

#endif
