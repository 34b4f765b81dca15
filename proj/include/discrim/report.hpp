#ifndef DISCRIM_REPORT_HPP
#define DISCRIM_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "discrim/algorithms.hpp"

namespace discrim
{

//! @brief Contents of a design.json file
struct DesignFile
{
  Design design;
  Vector theta_hat;  //!< empty when the file carries none
  double t_value = 0.;
  double accuracy = 0.;
  int iterations = 0;
  double runtime_seconds = 0.;
  bool converged = false;
  std::string algorithm;
};

//! @brief Writes design.json; numbers carry 17 significant digits
void write_design_json( std::filesystem::path const& path, SolveResult const& result, std::string const& algorithm,
                        double runtime_seconds );
DesignFile read_design_json( std::filesystem::path const& path );

//! @brief One row per history record, including per-phase cumulative wall times
void write_history_csv( std::filesystem::path const& path, std::vector<IterationRecord> const& history );

//! @brief (x, psi) on psi_grid equidistant points of a one-dimensional box
void write_psi_curve( std::filesystem::path const& path, ModelPair const& pair, Design const& design,
                      std::span<double const> theta_hat, BoxSpace const& box, int psi_grid );

struct ComparisonRow
{
  std::string algorithm;
  double reached_accuracy = 0.;
  double t_value = 0.;
  double runtime_seconds = 0.;
  int iterations = 0;
  std::size_t support_size = 0;
};

void write_comparison_csv( std::filesystem::path const& path, std::vector<ComparisonRow> const& rows );

//! @brief Shortest-round-trip decimal for a double (at least 17 significant digits when needed)
std::string format_number( double v );

} // namespace discrim

#endif
