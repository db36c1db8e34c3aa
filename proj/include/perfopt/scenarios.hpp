#pragma once

#include "perfopt/distribution_maps.hpp"
#include "perfopt/losses.hpp"
#include "perfopt/risk.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace perfopt {

struct ScenarioConstants {
    double gamma = 0.0;
    double beta = 0.0;
    double gamma_z = 0.0;
    double epsilon = 0.0;
    double sigma_min_location = 0.0;
    double sigma_min_scale = 0.0;
    /// "general" or "location_scale": which certificate rule applies.
    std::string rule = "general";
};

struct Scenario {
    std::string id;
    MapPtr map;
    LossPtr loss;
    Domain domain{1.0};
    ScenarioConstants constants;
    Vector default_theta0;

    std::optional<Vector> theta_po;
    std::optional<Vector> theta_ps;
    std::function<double(const Vector&)> pr;  // empty when no closed form

    /// "suboptimality" when PR has a closed form, "accuracy" otherwise.
    std::string metric = "suboptimality";
    /// Two-stage settings suited to the map's structure.
    std::string two_stage_model = "location";
    std::vector<std::size_t> static_rows;

    std::vector<std::pair<std::string, std::string>> metadata;

    ConvexityCertificate certificate() const;
    /// Fraction of fresh draws from D(theta) whose label matches 1{x^T theta > 0}.
    double accuracy(const Vector& theta, std::size_t n, std::uint64_t seed) const;
};

/// Named numeric parameters with defaults filled in by the factory.
using ScenarioParams = std::map<std::string, double>;

/// Point mass at eps theta with l = -beta theta^T z + (gamma/2)||theta||^2.
Scenario quadratic_scenario(double gamma, double beta, double eps, double radius, std::size_t d = 2);
/// z ~ N(eps theta, I), l = 0.5 ||z - theta||^2.
Scenario gaussian_location_scenario(double eps, double radius, std::size_t d = 1);
/// z ~ N(mu, eps^2 theta^2), l = 0.5 (z - theta)^2 + q (z - z*)^2.
Scenario gaussian_scale_scenario(double mu, double eps, double radius = 10.0, double q = 0.0, double z_star = 0.0);
/// x ~ Exp(rate), y | x ~ theta x Exp(1), squared loss on Theta = [0, R].
Scenario exponential_scale_scenario(double rate = 1.0, double radius = 10.0);
/// y = beta^T x + mu^T theta + noise with ||mu|| = eps.
Scenario election_linreg_scenario(std::size_t d, double eps, std::uint64_t seed, double radius = 10.0);
/// Synthetic logistic population whose first ceil(d/2) features move by eps theta.
Scenario strategic_classification_scenario(std::size_t d, double eps, double lambda_reg, std::uint64_t seed,
                                           double radius = 10.0);

/// E[sigmoid'(s)] for s ~ N(0, tau^2).
double mean_sigmoid_slope(double tau);

struct ScenarioInfo {
    std::string id;
    std::string description;
    ScenarioParams defaults;
    bool random_instance = false;  // instance depends on the seed
};

const std::vector<ScenarioInfo>& list_scenarios();

/// Builds a registered scenario; unknown ids or parameter names are config errors.
Scenario make_scenario(const std::string& id, const ScenarioParams& params, std::uint64_t seed);

/// Exact PR(theta); UnsupportedError when the scenario has no closed form.
double closed_form_reference(const Scenario& s, const Vector& theta);
/// Exact performative optimum; UnsupportedError when unknown.
Vector closed_form_optimum(const Scenario& s);

}  // namespace perfopt
