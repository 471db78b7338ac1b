#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demandcast/flops.hpp"
#include "demandcast/fuzzy.hpp"

namespace demandcast::efunn {

enum class SelectionMode { winner_take_all, all_above_threshold };
enum class Activation { satlin, radbas };

/// Crisp versions of the fuzzy pruning concepts: a node is OLD when its age
/// exceeds `old_age`, its activation is LOW below `low_activation`, and its
/// neighbourhood is dense when another node lies within `density_radius`
/// (fuzzy difference of input centroids).
struct PruningConfig {
    std::size_t old_age = 1000;
    double low_activation = 0.05;
    double density_radius = 0.1;
    /// Prune after every `interval`-th learning step; 0 = only on explicit calls.
    std::size_t interval = 1;
};

struct AggregationConfig {
    double thr1 = 0.05;
    double thr2 = 0.05;
    std::size_t interval = 0;
};

struct EfunnConfig {
    double sthr = 0.99;
    double errthr = 0.001;
    double lr1 = 0.05;
    double lr2 = 0.05;
    double lr3 = 0.0;
    double ss = 1.0;
    double tc = 0.0;
    std::size_t max_nodes = 100000;
    SelectionMode m_mode = SelectionMode::all_above_threshold;
    Activation activation = Activation::satlin;
    std::optional<PruningConfig> pruning;
    std::optional<AggregationConfig> aggregation;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Rule-layer prototype: an input hyper-sphere centre `w1` (concatenated
/// fuzzy degrees of every input variable) paired with an output centre `w2`.
struct RuleNode {
    std::vector<double> w1;
    std::vector<double> w2;
    std::size_t age = 0;
    double a1av = 1.0;
    std::size_t examples_absorbed = 1;

    friend bool operator==(const RuleNode&, const RuleNode&) = default;
};

struct LearnOutcome {
    bool created_node = false;
    /// Winning node at selection time, before any pruning/aggregation.
    std::size_t winner_index = 0;
    /// D(A2, TE) of the model's output before this example was absorbed.
    double output_error = 0.0;
    std::size_t nodes_total = 0;
};

/// Linguistic form of one rule node. `w1`/`w2` carry the exact centroids so
/// extraction followed by insertion is lossless; when they are empty,
/// insertion rebuilds one-hot centroids from the labels.
struct Rule {
    std::vector<std::string> antecedent_labels;
    std::string consequent_label;
    std::vector<double> w1;
    std::vector<double> w2;
    std::string text;
};

/// Labels for an n-MF partition, lowest centre first.
std::vector<std::string> labels_for(std::size_t n);

/// Moves a node towards an example:
/// w1 += lr1 (ex - w1); w2 += lr2 (te - satlin(a1 w2)) a1, clamped to [0, 1].
RuleNode update_node(RuleNode node, std::span<const double> ex, std::span<const double> te, double a1,
                     double lr1, double lr2, FlopCounter* flops = nullptr);

/// Evolving fuzzy neural network with a single real-valued output.
///
/// Layers: real inputs -> fuzzy input degrees -> rule nodes -> fuzzy output
/// degrees -> real output. The rule layer grows during one-pass learning.
/// Learning mutates the model and must be serialized by the caller;
/// `predict` on a quiescent model is safe from any number of threads.
class EfunnModel {
public:
    EfunnModel(EfunnConfig config, std::vector<fuzzy::MembershipPartition> input_partitions,
               fuzzy::MembershipPartition output_partition);

    [[nodiscard]] const EfunnConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<fuzzy::MembershipPartition>& input_partitions() const noexcept {
        return inputs_;
    }
    [[nodiscard]] const fuzzy::MembershipPartition& output_partition() const noexcept { return output_; }
    [[nodiscard]] const std::vector<RuleNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::optional<std::size_t> last_winner() const noexcept { return last_winner_; }
    [[nodiscard]] std::size_t examples_seen() const noexcept { return examples_seen_; }
    [[nodiscard]] double temporal_link(std::size_t from, std::size_t to) const;
    [[nodiscard]] std::size_t input_width() const noexcept { return inputs_.size(); }
    [[nodiscard]] std::size_t fuzzy_input_width() const noexcept { return fuzzy_input_width_; }

    [[nodiscard]] const FlopCounter& flops() const noexcept { return flops_; }

    fuzzy::FuzzyVector fuzzify_input(std::span<const double> x) const;
    std::vector<double> fuzzify_output(double y) const;

    /// Adds a node centred on (ex, te) with a zero temporal row/column.
    std::size_t create_rule_node(std::span<const double> ex, std::span<const double> te);

    /// A1 of every node for a fuzzy input, including the temporal bonus from
    /// the previous winner.
    std::vector<double> rule_activation(std::span<const double> ex) const;

    /// One step of the evolving algorithm for a normalized example.
    LearnOutcome learn_one(std::span<const double> x, double y);

    /// W3(prev, curr) += lr3 * a_prev * a_curr.
    void update_temporal(std::size_t prev, std::size_t curr, double a_prev, double a_curr);

    /// Normalized output for a normalized input; does not touch the model.
    [[nodiscard]] double predict(std::span<const double> x) const;

    std::size_t prune();
    std::size_t aggregate();

    [[nodiscard]] std::vector<Rule> extract_rules(const std::string& output_name = {}) const;
    std::size_t insert_rule(const Rule& rule);

    /// Overwrites node `index` (centroids, age, a1av, absorbed count); links are kept.
    void replace_node(std::size_t index, RuleNode node);

    friend void write_snapshot(const EfunnModel& model, std::ostream& out);
    friend EfunnModel read_efunn_snapshot(std::istream& in);

private:
    struct Selection {
        std::vector<std::size_t> nodes;
        std::size_t best = 0;
        double best_activation = 0.0;
    };

    double activation_function(double spatial_distance, double temporal_link) const;
    std::vector<double> distances_to(std::span<const double> ex, FlopCounter* flops) const;
    std::vector<double> activations_from(std::span<const double> distances, FlopCounter* flops) const;
    Selection select(std::span<const double> a1, bool fallback_to_best) const;
    std::vector<double> propagate(const Selection& selection, std::span<const double> a1,
                                  FlopCounter* flops) const;
    void remove_nodes(const std::vector<bool>& removed);
    void check_input(std::span<const double> x) const;

    EfunnConfig config_;
    std::vector<fuzzy::MembershipPartition> inputs_;
    fuzzy::MembershipPartition output_;
    std::size_t fuzzy_input_width_ = 0;
    std::vector<RuleNode> nodes_;
    std::vector<std::vector<double>> w3_;
    std::optional<std::size_t> last_winner_;
    double last_winner_activation_ = 0.0;
    std::size_t examples_seen_ = 0;
    FlopCounter flops_;
};

/// Versioned text snapshot: config, partitions, nodes and the non-zero W3
/// links (row-major), reals at 17 significant digits.
void write_snapshot(const EfunnModel& model, std::ostream& out);
EfunnModel read_efunn_snapshot(std::istream& in);

}  // namespace demandcast::efunn
