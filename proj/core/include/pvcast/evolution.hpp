#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace pvcast::evolution {

enum class GeneKind { categorical, integer, real };

struct GeneDomain {
  std::string name;
  GeneKind kind = GeneKind::real;
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  std::vector<std::string> choices;  // categorical only; value = choice index

  static GeneDomain categorical(std::string name, std::vector<std::string> choices);
  static GeneDomain integer(std::string name, double lo, double hi);
  static GeneDomain real(std::string name, double lo, double hi, bool log_scale = false);

  bool contains(double value) const;
};

struct SearchSpace {
  std::vector<GeneDomain> genes;

  /// Position of the named gene; throws InvalidArgument when absent.
  std::size_t index(std::string_view name) const;
};

struct Genome {
  std::vector<double> genes;  // aligned with SearchSpace::genes

  bool operator==(const Genome&) const = default;
};

struct GaConfig {
  std::size_t population_size = 20;
  std::size_t generations = 10;
  double crossover_rate = 0.8;
  double mutation_rate = 0.2;
  std::size_t elite_count = 1;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Passed to every fitness call. `seed` is derived from (config.seed,
/// generation, index) so evaluations can seed their own randomness without
/// depending on scheduling.
struct EvalContext {
  std::size_t generation = 0;
  std::size_t index = 0;
  std::uint64_t seed = 0;
};

/// Lower is better. Must be safe to call concurrently when threads > 1.
using Fitness = std::function<double(const Genome&, const EvalContext&)>;

struct Individual {
  Genome genome;
  double fitness = 0.0;
};

struct GenerationRecord {
  std::size_t generation = 0;
  std::vector<Individual> population;  // ranked, best first
  Individual best;                     // best so far
};

struct GaOptions {
  unsigned threads = 1;
  /// Placed at the front of the initial population (e.g. a default
  /// configuration); must respect the domains.
  std::vector<Genome> initial_genomes;
  std::function<void(const GenerationRecord&)> on_generation;
};

struct GaResult {
  Individual best;
  std::vector<double> history;        // best-so-far fitness per generation
  std::vector<std::string> failures;  // one line per failed evaluation
};

/// Uniform draw from every domain (log-uniform for log-scale reals).
Genome random_genome(const SearchSpace& space, std::uint64_t seed);

/// Rank-paired uniform crossover, Gaussian mutation (sigma = 10% of the
/// domain width, log space for log-scale genes, clipped) and categorical
/// resampling; elites are carried with their fitness. A fitness call that
/// throws or returns NaN scores +infinity and is listed in `failures`.
/// Throws EmptySpace or InvalidConfig.
GaResult run_ga(const SearchSpace& space, const Fitness& fitness, const GaConfig& config,
                const GaOptions& options = {});

/// {generation, best_fitness, best, population: [{genes: {name: value}, fitness}]};
/// infinite fitness is written as null.
nlohmann::json checkpoint_json(const SearchSpace& space, const GenerationRecord& record);
nlohmann::json genome_json(const SearchSpace& space, const Genome& genome);

}  // namespace pvcast::evolution
