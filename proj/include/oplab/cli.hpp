#ifndef OPLAB_CLI_HPP
#define OPLAB_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oplab/json_io.hpp"
#include "oplab/transforms.hpp"

namespace oplab {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of every command.
enum ExitCode : int { kExitPass = 0, kExitViolation = 1, kExitUsage = 2 };

// Bad or inconsistent configuration; maps to kExitUsage.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class MaximalOperator { M, H, HSharp, T, MBeta };

MaximalOperator parse_operator(const std::string& name);
std::string to_string(MaximalOperator op);

// Weak-type constants: the quasi-norm of the operator applied to μ is at
// most constant * ‖μ‖(ℝ). For M_β the right-hand side is the quasi-norm of
// the input function instead. `simple` selects the sharper T^< constant
// that holds for simple measures.
double weak_type_constant(MaximalOperator op, double c_x, bool simple = false, double beta = 0.5);

// Smallest C_X >= 0 for which the observed ratio is within the constant;
// 0 when the constant does not involve C_X and the ratio is within it,
// nullopt when no C_X works.
std::optional<double> minimal_feasible_cx(MaximalOperator op, double ratio, bool simple = false, double beta = 0.5);

// Cells [lo + k*step, lo + (k+1)*step], k < cells.
struct GridSpec {
  double lo = -50.0;
  double step = 0.01;
  std::size_t cells = 10000;
};

struct WeakNormResult {
  MaximalOperator op = MaximalOperator::M;
  GridFunction values;
  double offset = 0.0;          // shift applied because a grid edge hit an atom
  double quasinorm = 0.0;
  double reference = 0.0;       // ‖μ‖(ℝ), or the input quasi-norm for M_β
  double constant = 0.0;        // weak_type_constant(op, C_X)
  double constant_simple = 0.0; // T^< only
  std::optional<double> minimal_cx;
  bool pass = false;
};

struct WeakNormOptions {
  double c_x = 9.869604401089358;  // π²
  double beta = 0.5;
  ConeSampling cone;
  int threads = 1;
  bool general_t = true;  // judge T^< against the general-measure constant
};

// Samples the chosen maximal function of μ over the grid and compares its
// weak quasi-norm with the constant. M_β acts on the sampled ‖Hμ(·)‖.
WeakNormResult weak_norm_audit(const SimpleOpMeasure& mu, SchattenIndex norm, MaximalOperator op,
                               const GridSpec& grid, const WeakNormOptions& options);

// FNV-1a 64 of the compact JSON dump.
std::uint64_t config_hash(const Json& config);
std::string hex64(std::uint64_t v);

// 17 significant digits.
std::string format_double(double v);

struct CliOptions {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> threads;
};

// Runs one command; returns an ExitCode. Diagnostics go to stderr.
int run_command(const CliOptions& options);

int run_cz(const Json& config, const std::string& out_dir);
int run_weaknorm(const Json& config, const std::string& out_dir);
int run_scatter(const Json& config, const std::string& out_dir);
int run_sweep(const Json& config, const std::string& out_dir);

// Smooth k×channels sampler for the multiplication-operator model:
// G(x)_{rc} = sin(πx) e^{2πi(r-c)x} / (1 + r + c).
ComplexMatrix smooth_g(double x, int k, int channels);

}  // namespace oplab

#endif  // OPLAB_CLI_HPP
