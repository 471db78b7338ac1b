#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "demandcast/efunn.hpp"
#include "demandcast/error.hpp"
#include "demandcast/text_format.hpp"

namespace demandcast::efunn {

namespace {

constexpr const char* kKind = "demandcast-efunn";
constexpr int kVersion = 1;

const char* mode_name(SelectionMode m) {
    return m == SelectionMode::winner_take_all ? "winner_take_all" : "all_above_threshold";
}

SelectionMode mode_from(const std::string& s) {
    if (s == "winner_take_all") return SelectionMode::winner_take_all;
    if (s == "all_above_threshold") return SelectionMode::all_above_threshold;
    throw ParseError(fmt::format("unknown selection mode '{}'", s));
}

Activation activation_from(const std::string& s) {
    if (s == "satlin") return Activation::satlin;
    if (s == "radbas") return Activation::radbas;
    throw ParseError(fmt::format("unknown activation '{}'", s));
}

void write_partition(text::Writer& w, const fuzzy::MembershipPartition& p) {
    w.line("partition", fmt::format("{} {}", fuzzy::to_string(p.kind()), p.size()));
    w.line("name", p.variable_name().empty() ? std::string("-") : p.variable_name());
    w.line_reals("centers", p.centers());
    w.line_reals("widths", p.widths());
}

fuzzy::MembershipPartition read_partition(text::Reader& r) {
    const auto head = r.expect("partition");
    if (head.size() != 2) throw ParseError("partition line needs kind and size");
    const auto kind = fuzzy::mf_kind_from_string(head[0]);
    const auto n = static_cast<std::size_t>(text::parse_integer(head[1]));
    auto name = r.expect_text("name");
    if (name == "-") name.clear();
    auto centers = r.expect_reals("centers", n);
    auto widths = r.expect_reals("widths", n);
    return fuzzy::MembershipPartition(std::move(name), kind, std::move(centers), std::move(widths));
}

std::string reals_line(std::initializer_list<double> values) {
    std::string s;
    for (double v : values) {
        if (!s.empty()) s += ' ';
        s += text::format_real(v);
    }
    return s;
}

}  // namespace

void write_snapshot(const EfunnModel& model, std::ostream& out) {
    text::Writer w(out);
    const auto& c = model.config_;
    w.header(kKind, kVersion);
    w.line_real("sthr", c.sthr);
    w.line_real("errthr", c.errthr);
    w.line("rates", reals_line({c.lr1, c.lr2, c.lr3}));
    w.line("balance", reals_line({c.ss, c.tc}));
    w.line("max_nodes", static_cast<long long>(c.max_nodes));
    w.line("m_mode", mode_name(c.m_mode));
    w.line("activation", c.activation == Activation::radbas ? "radbas" : "satlin");
    if (c.pruning) {
        w.line("pruning", fmt::format("{} {} {} {}", c.pruning->old_age, text::format_real(c.pruning->low_activation),
                                      text::format_real(c.pruning->density_radius), c.pruning->interval));
    } else {
        w.line("pruning", "none");
    }
    if (c.aggregation) {
        w.line("aggregation", fmt::format("{} {} {}", text::format_real(c.aggregation->thr1),
                                          text::format_real(c.aggregation->thr2), c.aggregation->interval));
    } else {
        w.line("aggregation", "none");
    }
    w.line("inputs", static_cast<long long>(model.inputs_.size()));
    for (const auto& p : model.inputs_) write_partition(w, p);
    w.line("output", "1");
    write_partition(w, model.output_);
    w.line("state", fmt::format("{} {} {}", model.examples_seen_,
                                model.last_winner_ ? static_cast<long long>(*model.last_winner_) : -1LL,
                                text::format_real(model.last_winner_activation_)));
    w.line("nodes", static_cast<long long>(model.nodes_.size()));
    for (const auto& n : model.nodes_) {
        w.line("node", fmt::format("{} {} {}", n.age, text::format_real(n.a1av), n.examples_absorbed));
        w.line_reals("w1", n.w1);
        w.line_reals("w2", n.w2);
    }
    std::size_t nnz = 0;
    for (const auto& row : model.w3_) {
        for (double v : row) nnz += v != 0.0 ? 1 : 0;
    }
    w.line("links", static_cast<long long>(nnz));
    for (std::size_t i = 0; i < model.w3_.size(); ++i) {
        for (std::size_t j = 0; j < model.w3_[i].size(); ++j) {
            if (model.w3_[i][j] != 0.0) w.line("link", fmt::format("{} {} {}", i, j, text::format_real(model.w3_[i][j])));
        }
    }
    w.line("end", "efunn");
}

EfunnModel read_efunn_snapshot(std::istream& in) {
    text::Reader r(in);
    const int version = r.header(kKind);
    if (version != kVersion) throw ParseError(fmt::format("unsupported EFuNN snapshot version {}", version));

    EfunnConfig c;
    c.sthr = r.expect_real("sthr");
    c.errthr = r.expect_real("errthr");
    auto rates = r.expect_reals("rates", 3);
    c.lr1 = rates[0];
    c.lr2 = rates[1];
    c.lr3 = rates[2];
    auto balance = r.expect_reals("balance", 2);
    c.ss = balance[0];
    c.tc = balance[1];
    c.max_nodes = static_cast<std::size_t>(r.expect_integer("max_nodes"));
    c.m_mode = mode_from(r.expect_word("m_mode"));
    c.activation = activation_from(r.expect_word("activation"));
    if (auto t = r.expect("pruning"); !(t.size() == 1 && t[0] == "none")) {
        if (t.size() != 4) throw ParseError("pruning line needs 4 values");
        c.pruning = PruningConfig{static_cast<std::size_t>(text::parse_integer(t[0])), text::parse_real(t[1]),
                                  text::parse_real(t[2]), static_cast<std::size_t>(text::parse_integer(t[3]))};
    }
    if (auto t = r.expect("aggregation"); !(t.size() == 1 && t[0] == "none")) {
        if (t.size() != 3) throw ParseError("aggregation line needs 3 values");
        c.aggregation = AggregationConfig{text::parse_real(t[0]), text::parse_real(t[1]),
                                          static_cast<std::size_t>(text::parse_integer(t[2]))};
    }
    const auto n_inputs = static_cast<std::size_t>(r.expect_integer("inputs"));
    std::vector<fuzzy::MembershipPartition> inputs;
    for (std::size_t i = 0; i < n_inputs; ++i) inputs.push_back(read_partition(r));
    r.expect("output");
    auto output = read_partition(r);

    EfunnModel model(c, std::move(inputs), std::move(output));
    const auto state = r.expect("state");
    if (state.size() != 3) throw ParseError("state line needs 3 values");
    const auto examples_seen = static_cast<std::size_t>(text::parse_integer(state[0]));
    const long long last = text::parse_integer(state[1]);
    const double last_activation = text::parse_real(state[2]);

    const auto n_nodes = static_cast<std::size_t>(r.expect_integer("nodes"));
    for (std::size_t j = 0; j < n_nodes; ++j) {
        const auto head = r.expect("node");
        if (head.size() != 3) throw ParseError("node line needs age, a1av, examples");
        auto w1 = r.expect_reals("w1", model.fuzzy_input_width());
        auto w2 = r.expect_reals("w2", model.output_partition().size());
        model.create_rule_node(w1, w2);
        auto& node = model.nodes_.back();
        node.age = static_cast<std::size_t>(text::parse_integer(head[0]));
        node.a1av = text::parse_real(head[1]);
        node.examples_absorbed = static_cast<std::size_t>(text::parse_integer(head[2]));
    }
    const auto n_links = static_cast<std::size_t>(r.expect_integer("links"));
    for (std::size_t k = 0; k < n_links; ++k) {
        const auto t = r.expect("link");
        if (t.size() != 3) throw ParseError("link line needs row, column, value");
        const auto i = static_cast<std::size_t>(text::parse_integer(t[0]));
        const auto j = static_cast<std::size_t>(text::parse_integer(t[1]));
        if (i >= n_nodes || j >= n_nodes) throw ParseError(fmt::format("link ({}, {}) outside {} nodes", i, j, n_nodes));
        model.w3_[i][j] = text::parse_real(t[2]);
    }
    r.expect("end");

    if (last >= 0) {
        if (static_cast<std::size_t>(last) >= n_nodes) throw ParseError("last winner outside node range");
        model.last_winner_ = static_cast<std::size_t>(last);
    }
    model.last_winner_activation_ = last_activation;
    model.examples_seen_ = examples_seen;
    return model;
}

}  // namespace demandcast::efunn
