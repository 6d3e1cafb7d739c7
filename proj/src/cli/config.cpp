#include "oal/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "oal/core/rng.hpp"

namespace oal {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::size_t parse_size(const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& items, auto&& show) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + show(items[i]);
    return out;
}

struct Binding {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class F>
Binding size_key(std::string key, F field) {
    return {std::move(key), [field](ExperimentConfig& c, const std::string& v) { field(c) = parse_size(v); },
            [field](const ExperimentConfig& c) { return fmt(field(c)); }};
}
template <class F>
Binding double_key(std::string key, F field) {
    return {std::move(key), [field](ExperimentConfig& c, const std::string& v) { field(c) = parse_double(v); },
            [field](const ExperimentConfig& c) { return fmt(field(c)); }};
}
template <class F>
Binding bool_key(std::string key, F field) {
    return {std::move(key), [field](ExperimentConfig& c, const std::string& v) { field(c) = parse_bool(v); },
            [field](const ExperimentConfig& c) { return fmt(field(c)); }};
}

// Applies `f` to every score spec so that score.* parameters are shared.
template <class F>
void each_score(ExperimentConfig& c, F f) {
    for (auto& s : c.eval.scores) f(s);
}

const std::vector<Binding>& bindings() {
    using C = ExperimentConfig;
    static const std::vector<Binding> b = {
        {"seed", [](C& c, const std::string& v) { c.seed = parse_u64(v); }, [](const C& c) { return std::to_string(c.seed); }},
        {"out", [](C& c, const std::string& v) { c.out = v; }, [](const C& c) { return c.out; }},

        size_key("data.classes", [](auto& c) -> auto& { return c.data.classes; }),
        size_key("data.dim", [](auto& c) -> auto& { return c.data.dim; }),
        size_key("data.train_per_class", [](auto& c) -> auto& { return c.data.train_per_class; }),
        size_key("data.val_per_class", [](auto& c) -> auto& { return c.data.val_per_class; }),
        size_key("data.test_per_class", [](auto& c) -> auto& { return c.data.test_per_class; }),
        double_key("data.separation", [](auto& c) -> auto& { return c.data.separation; }),
        double_key("data.spread", [](auto& c) -> auto& { return c.data.spread; }),

        {"ood.kinds",
         [](C& c, const std::string& v) {
             c.ood.kinds.clear();
             for (const auto& k : split_list(v)) c.ood.kinds.push_back(ood_kind_from_string(k));
         },
         [](const C& c) { return join(c.ood.kinds, [](OodKind k) { return std::string(to_string(k)); }); }},
        size_key("ood.samples_per_set", [](auto& c) -> auto& { return c.ood.samples_per_set; }),
        double_key("ood.near_margin", [](auto& c) -> auto& { return c.ood.near_margin; }),
        double_key("ood.far_margin", [](auto& c) -> auto& { return c.ood.far_margin; }),
        double_key("ood.box_scale", [](auto& c) -> auto& { return c.ood.box_scale; }),
        double_key("ood.shell_scale", [](auto& c) -> auto& { return c.ood.shell_scale; }),

        size_key("teacher.feature_width", [](auto& c) -> auto& { return c.teacher.feature_width; }),
        size_key("teacher.hidden", [](auto& c) -> auto& { return c.teacher.hidden; }),
        size_key("teacher.epochs", [](auto& c) -> auto& { return c.teacher.epochs; }),
        size_key("teacher.batch", [](auto& c) -> auto& { return c.teacher.batch; }),
        double_key("teacher.lr", [](auto& c) -> auto& { return c.teacher.lr; }),
        size_key("teacher.text_width", [](auto& c) -> auto& { return c.teacher.text_width; }),

        size_key("synth.k", [](auto& c) -> auto& { return c.synth.k; }),
        size_key("synth.top", [](auto& c) -> auto& { return c.synth.top; }),
        double_key("synth.sigma", [](auto& c) -> auto& { return c.synth.sigma; }),
        size_key("synth.candidates", [](auto& c) -> auto& { return c.synth.candidates; }),
        size_key("synth.keep", [](auto& c) -> auto& { return c.synth.keep; }),

        size_key("latent.channels", [](auto& c) -> auto& { return c.latent.shape.channels; }),
        size_key("latent.height", [](auto& c) -> auto& { return c.latent.shape.height; }),
        size_key("latent.width", [](auto& c) -> auto& { return c.latent.shape.width; }),
        size_key("latent.count", [](auto& c) -> auto& { return c.latent.count; }),
        double_key("latent.tau", [](auto& c) -> auto& { return c.latent.tau; }),

        {"student.encoder_hidden",
         [](C& c, const std::string& v) {
             c.train.encoder_hidden.clear();
             for (const auto& h : split_list(v)) c.train.encoder_hidden.push_back(parse_size(h));
         },
         [](const C& c) { return join(c.train.encoder_hidden, [](std::size_t h) { return std::to_string(h); }); }},
        size_key("student.feature_width", [](auto& c) -> auto& { return c.train.feature_width; }),

        size_key("idkd.phi_hidden", [](auto& c) -> auto& { return c.train.phi_hidden; }),
        {"idkd.direction", [](C& c, const std::string& v) { c.train.kd_direction = parse_kd_direction(v); },
         [](const C& c) { return to_string(c.train.kd_direction); }},

        size_key("micl.align_hidden", [](auto& c) -> auto& { return c.train.align_hidden; }),
        size_key("micl.q_hidden", [](auto& c) -> auto& { return c.train.q_hidden; }),
        double_key("micl.q_lr", [](auto& c) -> auto& { return c.train.q_lr; }),
        {"micl.pairing", [](C& c, const std::string& v) { c.train.pairing = parse_pairing(v); },
         [](const C& c) { return to_string(c.train.pairing); }},
        size_key("micl.q_steps", [](auto& c) -> auto& { return c.train.q_steps; }),

        double_key("trainer.alpha1", [](auto& c) -> auto& { return c.train.weights.alpha1; }),
        double_key("trainer.alpha2", [](auto& c) -> auto& { return c.train.weights.alpha2; }),
        double_key("trainer.beta", [](auto& c) -> auto& { return c.train.weights.beta; }),
        double_key("trainer.gamma", [](auto& c) -> auto& { return c.train.weights.gamma; }),
        double_key("trainer.lr", [](auto& c) -> auto& { return c.train.lr; }),
        size_key("trainer.epochs", [](auto& c) -> auto& { return c.train.epochs; }),
        size_key("trainer.batch", [](auto& c) -> auto& { return c.train.batch; }),
        bool_key("trainer.idkd", [](auto& c) -> auto& { return c.train.switches.idkd; }),
        bool_key("trainer.micl1", [](auto& c) -> auto& { return c.train.switches.micl1; }),
        bool_key("trainer.micl2", [](auto& c) -> auto& { return c.train.switches.micl2; }),

        {"score.kinds",
         [](C& c, const std::string& v) {
             const ScoreSpec params = c.eval.scores.empty() ? ScoreSpec{} : c.eval.scores.front();
             c.eval.scores.clear();
             for (const auto& k : split_list(v)) {
                 ScoreSpec s = params;
                 s.kind = score_kind_from_string(k);
                 c.eval.scores.push_back(s);
             }
         },
         [](const C& c) { return join(c.eval.scores, [](const ScoreSpec& s) { return to_string(s.kind); }); }},
        {"score.temperature",
         [](C& c, const std::string& v) { each_score(c, [x = parse_double(v)](ScoreSpec& s) { s.temperature = x; }); },
         [](const C& c) { return fmt(c.eval.scores.empty() ? ScoreSpec{}.temperature : c.eval.scores[0].temperature); }},
        {"score.gen_gamma",
         [](C& c, const std::string& v) { each_score(c, [x = parse_double(v)](ScoreSpec& s) { s.gen_gamma = x; }); },
         [](const C& c) { return fmt(c.eval.scores.empty() ? ScoreSpec{}.gen_gamma : c.eval.scores[0].gen_gamma); }},
        {"score.gen_top",
         [](C& c, const std::string& v) { each_score(c, [x = parse_size(v)](ScoreSpec& s) { s.gen_top = x; }); },
         [](const C& c) { return fmt(c.eval.scores.empty() ? ScoreSpec{}.gen_top : c.eval.scores[0].gen_top); }},
        {"score.knn_k",
         [](C& c, const std::string& v) { each_score(c, [x = parse_size(v)](ScoreSpec& s) { s.knn_k = x; }); },
         [](const C& c) { return fmt(c.eval.scores.empty() ? ScoreSpec{}.knn_k : c.eval.scores[0].knn_k); }},
        size_key("score.histogram_bins", [](auto& c) -> auto& { return c.eval.histogram_bins; }),
    };
    return b;
}

const Binding& binding(const std::string& key) {
    for (const auto& b : bindings())
        if (b.key == key) return b;
    throw std::invalid_argument("unknown config key '" + key + "'");
}

}  // namespace

EvalConfig ExperimentConfig::default_eval() {
    EvalConfig e;
    for (auto k : {ScoreKind::Msp, ScoreKind::Ebo, ScoreKind::Gen, ScoreKind::Knn}) {
        ScoreSpec s;
        s.kind = k;
        e.scores.push_back(s);
    }
    return e;
}

const std::vector<std::string>& ExperimentConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& b : bindings()) out.push_back(b.key);
        return out;
    }();
    return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { binding(key).set(*this, value); }

std::string ExperimentConfig::get(const std::string& key) const { return binding(key).get(*this); }

void ExperimentConfig::validate() const {
    if (data.classes < 2) throw std::invalid_argument("data.classes must be >= 2");
    if (data.dim < data.classes) throw std::invalid_argument("data.dim must be >= data.classes");
    if (data.train_per_class == 0 || data.test_per_class == 0)
        throw std::invalid_argument("data.train_per_class and data.test_per_class must be positive");
    if (!(data.separation > 0.0) || !(data.spread >= 0.0)) throw std::invalid_argument("data.separation must be > 0 and data.spread >= 0");
    if (ood.kinds.empty()) throw std::invalid_argument("ood.kinds must name at least one set");
    if (ood.samples_per_set == 0) throw std::invalid_argument("ood.samples_per_set must be positive");
    if (teacher.feature_width <= train.feature_width)
        throw std::invalid_argument("teacher.feature_width must exceed student.feature_width");
    if (teacher.hidden == 0 || teacher.epochs == 0 || teacher.batch == 0 || !(teacher.lr > 0.0) || teacher.text_width == 0)
        throw std::invalid_argument("teacher.* sizes and lr must be positive");
    synth.validate();
    if (latent.count == 0 || latent.shape.channels == 0 || latent.shape.height == 0 || latent.shape.width == 0)
        throw std::invalid_argument("latent.* sizes must be positive");
    if (!(latent.tau >= 0.0)) throw std::invalid_argument("latent.tau must be >= 0");
    train.validate();
    if (eval.scores.empty()) throw std::invalid_argument("score.kinds must name at least one score");
    for (const auto& s : eval.scores) s.validate();
    if (eval.histogram_bins == 0) throw std::invalid_argument("score.histogram_bins must be positive");
}

std::string ExperimentConfig::resolved() const {
    std::string out;
    for (const auto& b : bindings()) out += b.key + " = " + b.get(*this) + "\n";
    return out;
}

std::string ExperimentConfig::hash() const {
    std::string text;
    for (const auto& b : bindings())
        if (b.key != "seed" && b.key != "out" && !b.key.starts_with("score.")) text += b.key + "=" + b.get(*this) + "\n";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw std::invalid_argument(where + "key '" + key + "' given twice");
        try {
            cfg.set(key, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace oal
