#include "demandcast/efunn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "demandcast/error.hpp"

namespace demandcast::efunn {

using fuzzy::fuzzy_difference;
using fuzzy::satlin;

void EfunnConfig::validate() const {
    if (!(sthr > 0.0 && sthr < 1.0)) throw ConfigError(fmt::format("sthr must lie in (0, 1), got {}", sthr));
    if (!(errthr > 0.0)) throw ConfigError(fmt::format("errthr must be positive, got {}", errthr));
    if (!(lr1 >= 0.0) || !(lr2 >= 0.0) || !(lr3 >= 0.0)) throw ConfigError("learning rates must be >= 0");
    if (!(ss >= 0.0) || !(tc >= 0.0)) throw ConfigError("ss and tc must be >= 0");
    if (max_nodes < 1) throw ConfigError("max_nodes must be >= 1");
    if (pruning && (!(pruning->low_activation >= 0.0) || !(pruning->density_radius >= 0.0))) {
        throw ConfigError("pruning thresholds must be >= 0");
    }
    if (aggregation && (!(aggregation->thr1 >= 0.0) || !(aggregation->thr2 >= 0.0))) {
        throw ConfigError("aggregation thresholds must be >= 0");
    }
}

std::vector<std::string> labels_for(std::size_t n) {
    switch (n) {
        case 2: return {"LOW", "HIGH"};
        case 3: return {"LOW", "MEDIUM", "HIGH"};
        case 4: return {"LOW", "MEDIUM-LOW", "MEDIUM-HIGH", "HIGH"};
        case 5: return {"LOW", "MEDIUM-LOW", "MEDIUM", "MEDIUM-HIGH", "HIGH"};
        default: {
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < n; ++i) labels.push_back(fmt::format("MF{}", i + 1));
            return labels;
        }
    }
}

namespace {

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace

RuleNode update_node(RuleNode node, std::span<const double> ex, std::span<const double> te, double a1,
                     double lr1, double lr2, FlopCounter* flops) {
    if (ex.size() != node.w1.size() || te.size() != node.w2.size()) {
        throw ShapeError("update_node: example does not match node centroid sizes");
    }
    for (std::size_t i = 0; i < ex.size(); ++i) node.w1[i] = (1.0 - lr1) * node.w1[i] + lr1 * ex[i];
    for (std::size_t i = 0; i < te.size(); ++i) {
        const double err = te[i] - satlin(node.w2[i] * a1);
        node.w2[i] = satlin(node.w2[i] + lr2 * err * a1);
    }
    node.examples_absorbed += 1;
    count(flops, 3 * ex.size() + 6 * te.size());
    return node;
}

EfunnModel::EfunnModel(EfunnConfig config, std::vector<fuzzy::MembershipPartition> input_partitions,
                       fuzzy::MembershipPartition output_partition)
    : config_(std::move(config)), inputs_(std::move(input_partitions)), output_(std::move(output_partition)) {
    config_.validate();
    if (inputs_.empty()) throw ConfigError("EFuNN needs at least one input partition");
    for (const auto& p : inputs_) fuzzy_input_width_ += p.size();
}

double EfunnModel::temporal_link(std::size_t from, std::size_t to) const {
    if (from >= nodes_.size() || to >= nodes_.size()) {
        throw IndexError(fmt::format("temporal link ({}, {}) outside {} nodes", from, to, nodes_.size()));
    }
    return w3_[from][to];
}

void EfunnModel::check_input(std::span<const double> x) const {
    if (x.size() != inputs_.size()) {
        throw ShapeError(fmt::format("expected {} inputs, got {}", inputs_.size(), x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || x[i] < -0.5 || x[i] > 1.5) {
            throw DataError(fmt::format("input {} = {} is not normalized", i, x[i]));
        }
    }
}

fuzzy::FuzzyVector EfunnModel::fuzzify_input(std::span<const double> x) const {
    return fuzzy::fuzzify(x, inputs_);
}

std::vector<double> EfunnModel::fuzzify_output(double y) const { return fuzzy::fuzzify(y, output_); }

std::size_t EfunnModel::create_rule_node(std::span<const double> ex, std::span<const double> te) {
    if (nodes_.size() >= config_.max_nodes) {
        throw CapacityError(fmt::format("rule node budget of {} exhausted", config_.max_nodes));
    }
    if (ex.size() != fuzzy_input_width_ || te.size() != output_.size()) {
        throw ShapeError("create_rule_node: fuzzy vectors do not match the partitions");
    }
    RuleNode node;
    node.w1.assign(ex.begin(), ex.end());
    node.w2.assign(te.begin(), te.end());
    nodes_.push_back(std::move(node));
    for (auto& row : w3_) row.push_back(0.0);
    w3_.emplace_back(nodes_.size(), 0.0);
    return nodes_.size() - 1;
}

double EfunnModel::activation_function(double spatial_distance, double temporal_link) const {
    if (config_.activation == Activation::radbas) {
        return fuzzy::radbas(config_.ss * spatial_distance - config_.tc * temporal_link);
    }
    return satlin(1.0 - config_.ss * spatial_distance + config_.tc * temporal_link);
}

std::vector<double> EfunnModel::distances_to(std::span<const double> ex, FlopCounter* flops) const {
    std::vector<double> d(nodes_.size());
    for (std::size_t j = 0; j < nodes_.size(); ++j) d[j] = fuzzy_difference(ex, nodes_[j].w1, flops);
    return d;
}

std::vector<double> EfunnModel::activations_from(std::span<const double> distances, FlopCounter* flops) const {
    std::vector<double> a1(distances.size());
    for (std::size_t j = 0; j < distances.size(); ++j) {
        const double link = last_winner_ ? w3_[*last_winner_][j] : 0.0;
        a1[j] = activation_function(distances[j], link);
    }
    count(flops, 4 * distances.size());
    return a1;
}

std::vector<double> EfunnModel::rule_activation(std::span<const double> ex) const {
    if (nodes_.empty()) throw EmptyModelError("rule_activation on a model without rule nodes");
    if (ex.size() != fuzzy_input_width_) throw ShapeError("rule_activation: fuzzy input width mismatch");
    return activations_from(distances_to(ex, nullptr), nullptr);
}

EfunnModel::Selection EfunnModel::select(std::span<const double> a1, bool fallback_to_best) const {
    Selection s;
    s.best = argmax(a1);
    s.best_activation = a1[s.best];
    if (config_.m_mode == SelectionMode::winner_take_all) {
        if (s.best_activation >= config_.sthr) s.nodes.push_back(s.best);
    } else {
        for (std::size_t j = 0; j < a1.size(); ++j) {
            if (a1[j] >= config_.sthr) s.nodes.push_back(j);
        }
    }
    if (s.nodes.empty() && fallback_to_best) s.nodes.push_back(s.best);
    return s;
}

std::vector<double> EfunnModel::propagate(const Selection& selection, std::span<const double> a1,
                                          FlopCounter* flops) const {
    std::vector<double> a2(output_.size(), 0.0);
    double total = 0.0;
    for (std::size_t j : selection.nodes) {
        total += a1[j];
        for (std::size_t i = 0; i < a2.size(); ++i) a2[i] += a1[j] * nodes_[j].w2[i];
    }
    count(flops, selection.nodes.size() * (FlopCounter::dot(a2.size()) + 1) + 2 * a2.size());
    if (!(total > 0.0)) {
        // Every chosen node is silent; fall back to the best node's consequent.
        if (selection.nodes.empty()) return a2;
        return nodes_[selection.best].w2;
    }
    for (double& v : a2) v = satlin(v / total);
    return a2;
}

LearnOutcome EfunnModel::learn_one(std::span<const double> x, double y) {
    check_input(x);
    if (!std::isfinite(y) || y < -0.5 || y > 1.5) throw DataError(fmt::format("target {} is not normalized", y));

    FlopCounter* flops = &flops_;
    const auto ex = fuzzy::fuzzify(x, inputs_, flops).degrees;
    const auto te = fuzzy::fuzzify(y, output_, flops);
    ++examples_seen_;

    LearnOutcome outcome;
    std::size_t winner = 0;
    double winner_activation = 1.0;

    if (nodes_.empty()) {
        winner = create_rule_node(ex, te);
        outcome.created_node = true;
        outcome.output_error = 1.0;
    } else {
        const auto distances = distances_to(ex, flops);
        const auto a1 = activations_from(distances, flops);

        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            auto& node = nodes_[j];
            node.age += 1;
            node.a1av += (a1[j] - node.a1av) / static_cast<double>(node.age + 1);
        }
        count(flops, 3 * nodes_.size());

        const Selection selection = select(a1, false);
        Selection scored = selection;
        if (scored.nodes.empty()) scored.nodes.push_back(scored.best);
        const auto a2 = propagate(scored, a1, flops);
        outcome.output_error = fuzzy_difference(a2, te, flops);

        const bool spatial_miss = selection.best_activation < config_.sthr;
        const bool output_miss = outcome.output_error > config_.errthr;
        if (spatial_miss || output_miss) {
            if (nodes_.size() < config_.max_nodes) {
                winner = create_rule_node(ex, te);
                outcome.created_node = true;
            } else {
                winner = selection.best;
                winner_activation = a1[winner];
                nodes_[winner] =
                    update_node(std::move(nodes_[winner]), ex, te, a1[winner], config_.lr1, config_.lr2, flops);
            }
        } else {
            for (std::size_t k : selection.nodes) {
                nodes_[k] = update_node(std::move(nodes_[k]), ex, te, a1[k], config_.lr1, config_.lr2, flops);
            }
            winner = selection.best;
            winner_activation = a1[winner];
        }
    }

    if (last_winner_ && config_.lr3 > 0.0) {
        update_temporal(*last_winner_, winner, last_winner_activation_, winner_activation);
    }
    last_winner_ = winner;
    last_winner_activation_ = winner_activation;
    outcome.winner_index = winner;

    if (config_.pruning && config_.pruning->interval > 0 && examples_seen_ % config_.pruning->interval == 0) {
        prune();
    }
    if (config_.aggregation && config_.aggregation->interval > 0 &&
        examples_seen_ % config_.aggregation->interval == 0) {
        aggregate();
    }
    outcome.nodes_total = nodes_.size();
    return outcome;
}

void EfunnModel::update_temporal(std::size_t prev, std::size_t curr, double a_prev, double a_curr) {
    if (prev >= nodes_.size() || curr >= nodes_.size()) {
        throw IndexError(fmt::format("temporal update ({}, {}) outside {} nodes", prev, curr, nodes_.size()));
    }
    w3_[prev][curr] += config_.lr3 * a_prev * a_curr;
    flops_.scalar(3);
}

double EfunnModel::predict(std::span<const double> x) const {
    check_input(x);
    if (nodes_.empty()) throw EmptyModelError("predict on a model without rule nodes");
    const auto ex = fuzzy::fuzzify(x, inputs_).degrees;
    const auto a1 = activations_from(distances_to(ex, nullptr), nullptr);
    const auto a2 = propagate(select(a1, true), a1, nullptr);
    return fuzzy::defuzzify(a2, output_);
}

void EfunnModel::remove_nodes(const std::vector<bool>& removed) {
    std::vector<std::size_t> new_index(nodes_.size(), SIZE_MAX);
    std::vector<RuleNode> kept_nodes;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (removed[j]) continue;
        new_index[j] = kept_nodes.size();
        kept_nodes.push_back(std::move(nodes_[j]));
    }
    std::vector<std::vector<double>> kept_links;
    kept_links.reserve(kept_nodes.size());
    for (std::size_t r = 0; r < w3_.size(); ++r) {
        if (removed[r]) continue;
        std::vector<double> row;
        row.reserve(kept_nodes.size());
        for (std::size_t c = 0; c < w3_[r].size(); ++c) {
            if (!removed[c]) row.push_back(w3_[r][c]);
        }
        kept_links.push_back(std::move(row));
    }
    if (last_winner_) {
        const std::size_t mapped = new_index[*last_winner_];
        if (mapped == SIZE_MAX) {
            last_winner_.reset();
        } else {
            last_winner_ = mapped;
        }
    }
    nodes_ = std::move(kept_nodes);
    w3_ = std::move(kept_links);
}

std::size_t EfunnModel::prune() {
    if (!config_.pruning) throw DisabledError("pruning is not configured");
    const auto& cfg = *config_.pruning;
    std::vector<bool> removed(nodes_.size(), false);
    std::size_t count_removed = 0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        const auto& node = nodes_[j];
        if (node.age <= cfg.old_age || node.a1av >= cfg.low_activation) continue;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            if (k == j || removed[k]) continue;
            if (fuzzy_difference(node.w1, nodes_[k].w1, &flops_) <= cfg.density_radius) {
                removed[j] = true;
                ++count_removed;
                break;
            }
        }
    }
    if (count_removed > 0) remove_nodes(removed);
    return count_removed;
}

std::size_t EfunnModel::aggregate() {
    if (!config_.aggregation) throw DisabledError("aggregation is not configured");
    const auto& cfg = *config_.aggregation;
    std::vector<bool> used(nodes_.size(), false);
    std::vector<bool> absorbed(nodes_.size(), false);
    std::size_t merges = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (used[i]) continue;
        for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
            if (used[j]) continue;
            if (fuzzy_difference(nodes_[i].w1, nodes_[j].w1, &flops_) > cfg.thr1) continue;
            if (fuzzy_difference(nodes_[i].w2, nodes_[j].w2, &flops_) > cfg.thr2) continue;

            auto& keep = nodes_[i];
            const auto& gone = nodes_[j];
            for (std::size_t k = 0; k < keep.w1.size(); ++k) keep.w1[k] = (keep.w1[k] + gone.w1[k]) / 2.0;
            for (std::size_t k = 0; k < keep.w2.size(); ++k) keep.w2[k] = (keep.w2[k] + gone.w2[k]) / 2.0;
            const double total = static_cast<double>(keep.examples_absorbed + gone.examples_absorbed);
            keep.a1av = (keep.a1av * static_cast<double>(keep.examples_absorbed) +
                         gone.a1av * static_cast<double>(gone.examples_absorbed)) /
                        total;
            keep.age = std::max(keep.age, gone.age);
            keep.examples_absorbed += gone.examples_absorbed;

            for (std::size_t c = 0; c < w3_.size(); ++c) w3_[i][c] += w3_[j][c];
            for (auto& row : w3_) row[i] += row[j];
            if (last_winner_ == j) last_winner_ = i;

            used[i] = used[j] = true;
            absorbed[j] = true;
            ++merges;
            break;
        }
    }
    if (merges > 0) remove_nodes(absorbed);
    return merges;
}

std::vector<Rule> EfunnModel::extract_rules(const std::string& output_name) const {
    std::vector<Rule> rules;
    rules.reserve(nodes_.size());
    const std::string out_name = output_name.empty() ? output_.variable_name() : output_name;
    for (const auto& node : nodes_) {
        Rule rule;
        rule.w1 = node.w1;
        rule.w2 = node.w2;
        std::string text = "If";
        std::size_t offset = 0;
        for (std::size_t v = 0; v < inputs_.size(); ++v) {
            const std::size_t n = inputs_[v].size();
            const auto seg = std::span<const double>(node.w1).subspan(offset, n);
            offset += n;
            rule.antecedent_labels.push_back(labels_for(n)[argmax(seg)]);
            text += fmt::format("{} the {} is {}", v == 0 ? "" : " and", inputs_[v].variable_name(),
                                rule.antecedent_labels.back());
        }
        rule.consequent_label = labels_for(output_.size())[argmax(node.w2)];
        text += fmt::format(" then the {} is {}.", out_name, rule.consequent_label);
        rule.text = std::move(text);
        rules.push_back(std::move(rule));
    }
    return rules;
}

namespace {

std::vector<double> one_hot_from_label(const std::string& label, std::size_t n) {
    const auto labels = labels_for(n);
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ShapeError(fmt::format("label '{}' does not name one of {} MFs", label, n));
    std::vector<double> v(n, 0.0);
    v[static_cast<std::size_t>(it - labels.begin())] = 1.0;
    return v;
}

}  // namespace

std::size_t EfunnModel::insert_rule(const Rule& rule) {
    if (nodes_.size() >= config_.max_nodes) {
        throw CapacityError(fmt::format("rule node budget of {} exhausted", config_.max_nodes));
    }
    std::vector<double> w1 = rule.w1;
    std::vector<double> w2 = rule.w2;
    if (w1.empty()) {
        if (rule.antecedent_labels.size() != inputs_.size()) {
            throw ShapeError(fmt::format("rule has {} antecedents, model has {} inputs",
                                         rule.antecedent_labels.size(), inputs_.size()));
        }
        for (std::size_t v = 0; v < inputs_.size(); ++v) {
            auto seg = one_hot_from_label(rule.antecedent_labels[v], inputs_[v].size());
            w1.insert(w1.end(), seg.begin(), seg.end());
        }
    }
    if (w2.empty()) w2 = one_hot_from_label(rule.consequent_label, output_.size());
    if (w1.size() != fuzzy_input_width_ || w2.size() != output_.size()) {
        throw ShapeError("rule centroids do not match the model's partitions");
    }
    for (double d : w1) {
        if (!(d >= 0.0 && d <= 1.0)) throw ShapeError("rule antecedent degree outside [0, 1]");
    }
    for (double d : w2) {
        if (!(d >= 0.0 && d <= 1.0)) throw ShapeError("rule consequent degree outside [0, 1]");
    }
    return create_rule_node(w1, w2);
}

void EfunnModel::replace_node(std::size_t index, RuleNode node) {
    if (index >= nodes_.size()) throw IndexError(fmt::format("node {} outside {} nodes", index, nodes_.size()));
    if (node.w1.size() != fuzzy_input_width_ || node.w2.size() != output_.size()) {
        throw ShapeError("replacement node does not match the model's partitions");
    }
    for (double d : node.w1) {
        if (!(d >= 0.0 && d <= 1.0)) throw ShapeError("node w1 degree outside [0, 1]");
    }
    for (double d : node.w2) {
        if (!(d >= 0.0 && d <= 1.0)) throw ShapeError("node w2 degree outside [0, 1]");
    }
    if (node.examples_absorbed < 1) throw ShapeError("a node absorbs at least one example");
    nodes_[index] = std::move(node);
}

}  // namespace demandcast::efunn
