#include "pvcast/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pvcast/error.hpp"
#include "pvcast/parallel.hpp"
#include "pvcast/random.hpp"

namespace pvcast::evolution {

using nlohmann::json;

namespace {

constexpr double kWorst = std::numeric_limits<double>::infinity();

void validate_space(const SearchSpace& space) {
  require(!space.genes.empty(), Errc::EmptySpace, "search space has no genes");
  for (const auto& g : space.genes) {
    if (g.kind == GeneKind::categorical) {
      require(!g.choices.empty(), Errc::EmptySpace, g.name + " has no choices");
    } else {
      require(std::isfinite(g.lo) && std::isfinite(g.hi) && g.lo <= g.hi, Errc::EmptySpace, g.name + " has an empty range");
      require(!g.log_scale || g.lo > 0.0, Errc::InvalidConfig, g.name + " log scale needs a positive range");
      if (g.kind == GeneKind::integer)
        require(std::ceil(g.lo) <= std::floor(g.hi), Errc::EmptySpace, g.name + " contains no integer");
    }
  }
}

double sample(const GeneDomain& g, Rng& rng) {
  switch (g.kind) {
    case GeneKind::categorical:
      return static_cast<double>(rng.index(g.choices.size()));
    case GeneKind::integer:
      return static_cast<double>(
          rng.uniform_int(static_cast<std::int64_t>(std::ceil(g.lo)), static_cast<std::int64_t>(std::floor(g.hi))));
    case GeneKind::real:
      if (g.log_scale) return std::exp(rng.uniform(std::log(g.lo), std::log(g.hi)));
      return rng.uniform(g.lo, g.hi);
  }
  return g.lo;
}

double mutate(const GeneDomain& g, double value, Rng& rng) {
  if (g.kind == GeneKind::categorical) return sample(g, rng);
  double v = 0.0;
  if (g.log_scale) {
    const double lo = std::log(g.lo), hi = std::log(g.hi);
    v = std::exp(std::clamp(std::log(value) + 0.1 * (hi - lo) * rng.normal(), lo, hi));
  } else {
    v = value + 0.1 * (g.hi - g.lo) * rng.normal();
  }
  if (g.kind == GeneKind::integer) v = std::round(v);
  return std::clamp(v, g.kind == GeneKind::integer ? std::ceil(g.lo) : g.lo,
                    g.kind == GeneKind::integer ? std::floor(g.hi) : g.hi);
}

json fitness_json(double f) { return std::isfinite(f) ? json(f) : json(nullptr); }

}  // namespace

GeneDomain GeneDomain::categorical(std::string name, std::vector<std::string> choices) {
  GeneDomain g;
  g.name = std::move(name);
  g.kind = GeneKind::categorical;
  g.hi = choices.empty() ? 0.0 : static_cast<double>(choices.size() - 1);
  g.choices = std::move(choices);
  return g;
}

GeneDomain GeneDomain::integer(std::string name, double lo, double hi) {
  GeneDomain g;
  g.name = std::move(name);
  g.kind = GeneKind::integer;
  g.lo = lo;
  g.hi = hi;
  return g;
}

GeneDomain GeneDomain::real(std::string name, double lo, double hi, bool log_scale) {
  GeneDomain g;
  g.name = std::move(name);
  g.kind = GeneKind::real;
  g.lo = lo;
  g.hi = hi;
  g.log_scale = log_scale;
  return g;
}

bool GeneDomain::contains(double value) const {
  if (!std::isfinite(value)) return false;
  if (kind == GeneKind::categorical)
    return value >= 0.0 && value < static_cast<double>(choices.size()) && value == std::floor(value);
  if (kind == GeneKind::integer && value != std::floor(value)) return false;
  return value >= lo && value <= hi;
}

std::size_t SearchSpace::index(std::string_view name) const {
  for (std::size_t i = 0; i < genes.size(); ++i)
    if (genes[i].name == name) return i;
  fail(Errc::InvalidArgument, "unknown gene " + std::string(name));
}

void GaConfig::validate() const {
  require(population_size >= 2, Errc::InvalidConfig, "population_size must be at least 2");
  require(generations >= 1, Errc::InvalidConfig, "generations must be at least 1");
  require(crossover_rate >= 0.0 && crossover_rate <= 1.0, Errc::InvalidConfig, "crossover_rate must be in [0,1]");
  require(mutation_rate >= 0.0 && mutation_rate <= 1.0, Errc::InvalidConfig, "mutation_rate must be in [0,1]");
  require(elite_count >= 1, Errc::InvalidConfig, "elite_count must be at least 1");
  require(elite_count < population_size, Errc::InvalidConfig, "elite_count must be below population_size");
}

Genome random_genome(const SearchSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  Genome g;
  for (const auto& d : space.genes) g.genes.push_back(sample(d, rng));
  return g;
}

GaResult run_ga(const SearchSpace& space, const Fitness& fitness, const GaConfig& config, const GaOptions& options) {
  validate_space(space);
  config.validate();
  for (const auto& g : options.initial_genomes) {
    require(g.genes.size() == space.genes.size(), Errc::InvalidConfig, "initial genome has the wrong length");
    for (std::size_t j = 0; j < g.genes.size(); ++j)
      require(space.genes[j].contains(g.genes[j]), Errc::InvalidConfig,
              "initial genome gene " + space.genes[j].name + " is outside its domain");
  }

  GaResult result;
  const std::size_t pop = config.population_size;

  // evaluates population[from..] in place; failures are collected by index
  auto evaluate = [&](std::vector<Individual>& population, std::size_t from, std::size_t generation) {
    const std::size_t count = population.size() - from;
    std::vector<std::string> errors(count);
    parallel_for(count, options.threads, [&](std::size_t k) {
      const std::size_t i = from + k;
      const EvalContext ctx{generation, i, derive_seed(config.seed, {generation, i, 0xf17})};
      double f = kWorst;
      try {
        f = fitness(population[i].genome, ctx);
        if (std::isnan(f)) {
          errors[k] = "fitness is NaN";
          f = kWorst;
        }
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
      population[i].fitness = f;
    });
    for (std::size_t k = 0; k < count; ++k)
      if (!errors[k].empty())
        result.failures.push_back("FitnessFailure: generation " + std::to_string(generation) + " individual " +
                                  std::to_string(from + k) + ": " + errors[k]);
  };

  std::vector<Individual> population;
  for (std::size_t i = 0; i < pop; ++i) {
    if (i < options.initial_genomes.size())
      population.push_back({options.initial_genomes[i], 0.0});
    else
      population.push_back({random_genome(space, derive_seed(config.seed, {0, i})), 0.0});
  }
  evaluate(population, 0, 0);

  result.best = population.front();
  for (std::size_t gen = 0;; ++gen) {
    std::stable_sort(population.begin(), population.end(),
                     [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; });
    if (gen == 0 || population.front().fitness < result.best.fitness) result.best = population.front();
    result.history.push_back(result.best.fitness);
    if (options.on_generation) options.on_generation(GenerationRecord{gen, population, result.best});
    if (gen + 1 == config.generations) break;

    std::vector<Individual> next(population.begin(), population.begin() + static_cast<std::ptrdiff_t>(config.elite_count));
    const std::size_t top = (pop + 1) / 2;
    const std::size_t bottom = pop - top;
    for (std::size_t k = 0; next.size() < pop; ++k) {
      Rng rng(derive_seed(config.seed, {gen + 1, k}));
      const Genome& better = population[k % top].genome;
      const Genome& worse = population[bottom == 0 ? k % top : top + k % bottom].genome;
      Genome child = better;
      if (rng.bernoulli(config.crossover_rate))
        for (std::size_t j = 0; j < child.genes.size(); ++j)
          if (rng.bernoulli(0.5)) child.genes[j] = worse.genes[j];
      for (std::size_t j = 0; j < child.genes.size(); ++j)
        if (rng.bernoulli(config.mutation_rate)) child.genes[j] = mutate(space.genes[j], child.genes[j], rng);
      next.push_back({std::move(child), 0.0});
    }
    population = std::move(next);
    evaluate(population, config.elite_count, gen + 1);
  }
  return result;
}

json genome_json(const SearchSpace& space, const Genome& genome) {
  json out = json::object();
  for (std::size_t j = 0; j < space.genes.size() && j < genome.genes.size(); ++j) {
    const auto& d = space.genes[j];
    if (d.kind == GeneKind::categorical)
      out[d.name] = d.choices.at(static_cast<std::size_t>(genome.genes[j]));
    else
      out[d.name] = genome.genes[j];
  }
  return out;
}

json checkpoint_json(const SearchSpace& space, const GenerationRecord& record) {
  json population = json::array();
  for (const auto& ind : record.population)
    population.push_back({{"genes", genome_json(space, ind.genome)}, {"fitness", fitness_json(ind.fitness)}});
  return {{"generation", record.generation},
          {"best_fitness", fitness_json(record.best.fitness)},
          {"best", genome_json(space, record.best.genome)},
          {"population", population}};
}

}  // namespace pvcast::evolution
