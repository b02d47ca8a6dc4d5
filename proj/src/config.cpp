#include "bislab/config.hpp"

#include "bislab/csv.hpp"
#include "bislab/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

namespace bislab {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

double to_double(const std::string& v) { return csv::parse_double(v); }

long long to_int(const std::string& v) { return csv::parse_int(v); }

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos)
            out.push_back(item.substr(b, e - b + 1));
    }
    if (out.empty())
        throw std::invalid_argument("empty list");
    return out;
}

template <typename T, typename F>
std::vector<T> map_list(const std::string& v, F f) {
    std::vector<T> out;
    for (const auto& item : split_list(v))
        out.push_back(f(item));
    return out;
}

std::pair<SamplerKind, SamplerKind> parse_pair(const std::string& item) {
    const auto slash = item.find('/');
    if (slash == std::string::npos)
        throw std::invalid_argument("sampler pair must look like labeled/unlabeled: '" + item + "'");
    return {parse_sampler_kind(item.substr(0, slash)), parse_sampler_kind(item.substr(slash + 1))};
}

const std::vector<std::pair<std::string, Setter>>& registry() {
    static const std::vector<std::pair<std::string, Setter>> keys = {
        {"data.k", [](auto& c, auto& v) { c.data.k = static_cast<int>(to_int(v)); }},
        {"data.n1", [](auto& c, auto& v) { c.data.n1 = to_int(v); }},
        {"data.lambda", [](auto& c, auto& v) { c.data.lambda = to_double(v); }},
        {"data.beta", [](auto& c, auto& v) { c.data.beta = to_double(v); }},
        {"data.dim", [](auto& c, auto& v) { c.data.dim = static_cast<int>(to_int(v)); }},
        {"data.class_sep", [](auto& c, auto& v) { c.data.class_sep = to_double(v); }},
        {"data.noise_sigma", [](auto& c, auto& v) { c.data.noise_sigma = to_double(v); }},
        {"data.test_per_class", [](auto& c, auto& v) { c.data.test_per_class = to_int(v); }},
        {"data.seed", [](auto& c, auto& v) { c.data_seed = static_cast<std::uint64_t>(to_int(v)); }},
        {"data.path", [](auto& c, auto& v) { c.data_path = v; }},

        {"augment.weak_sigma", [](auto& c, auto& v) { c.weak_sigma = to_double(v); }},
        {"augment.strong_sigma", [](auto& c, auto& v) { c.strong_sigma = to_double(v); }},
        {"augment.drop_prob", [](auto& c, auto& v) { c.drop_prob = to_double(v); }},

        {"train.epochs", [](auto& c, auto& v) { c.train.epochs = static_cast<int>(to_int(v)); }},
        {"train.steps_per_epoch",
         [](auto& c, auto& v) { c.train.steps_per_epoch = static_cast<int>(to_int(v)); }},
        {"train.batch_labeled",
         [](auto& c, auto& v) { c.train.batch_labeled = static_cast<int>(to_int(v)); }},
        {"train.batch_unlabeled",
         [](auto& c, auto& v) { c.train.batch_unlabeled = static_cast<int>(to_int(v)); }},
        {"train.tau", [](auto& c, auto& v) { c.train.tau = to_double(v); }},
        {"train.lambda_u", [](auto& c, auto& v) { c.train.lambda_u = to_double(v); }},
        {"train.q", [](auto& c, auto& v) { c.train.q = to_double(v); }},
        {"train.lr", [](auto& c, auto& v) { c.train.lr = to_double(v); }},
        {"train.hidden", [](auto& c, auto& v) { c.train.hidden = static_cast<int>(to_int(v)); }},
        {"train.labeled_sampler",
         [](auto& c, auto& v) { c.train.labeled_sampler = parse_sampler_kind(v); }},
        {"train.unlabeled_sampler",
         [](auto& c, auto& v) { c.train.unlabeled_sampler = parse_sampler_kind(v); }},
        {"train.seed", [](auto& c, auto& v) { c.train_seed = static_cast<std::uint64_t>(to_int(v)); }},

        {"finetune.epochs", [](auto& c, auto& v) { c.finetune_epochs = static_cast<int>(to_int(v)); }},
        {"finetune.labeled_sampler",
         [](auto& c, auto& v) { c.finetune_labeled_sampler = parse_sampler_kind(v); }},
        {"finetune.unlabeled_sampler",
         [](auto& c, auto& v) { c.finetune_unlabeled_sampler = parse_sampler_kind(v); }},
        {"finetune.lr_scale", [](auto& c, auto& v) { c.train.finetune_lr_scale = to_double(v); }},
        {"finetune.seed",
         [](auto& c, auto& v) { c.finetune_seed = static_cast<std::uint64_t>(to_int(v)); }},

        {"bis.schedule", [](auto& c, auto& v) { c.bis.schedule = parse_schedule_kind(v); }},
        {"bis.sampler_a", [](auto& c, auto& v) { c.bis.sampler_a = parse_sampler_kind(v); }},
        {"bis.sampler_b", [](auto& c, auto& v) { c.bis.sampler_b = parse_sampler_kind(v); }},
        {"bis.t_max", [](auto& c, auto& v) { c.bis.t_max = static_cast<int>(to_int(v)); }},

        {"grid.lambdas", [](auto& c, auto& v) { c.grid_lambdas = map_list<double>(v, to_double); }},
        {"grid.betas", [](auto& c, auto& v) { c.grid_betas = map_list<double>(v, to_double); }},
        {"grid.pairs",
         [](auto& c, auto& v) {
             c.grid_pairs = map_list<std::pair<SamplerKind, SamplerKind>>(v, parse_pair);
         }},
        {"grid.schedules",
         [](auto& c, auto& v) {
             c.grid_schedules.clear();
             for (const auto& item : split_list(v))
                 if (item != "none")
                     c.grid_schedules.push_back(parse_schedule_kind(item));
         }},
        {"grid.qs", [](auto& c, auto& v) { c.grid_qs = map_list<double>(v, to_double); }},
        {"grid.seeds",
         [](auto& c, auto& v) {
             c.grid_seeds = map_list<std::uint64_t>(
                 v, [](const std::string& s) { return static_cast<std::uint64_t>(to_int(s)); });
         }},
        {"grid.finetune", [](auto& c, auto& v) { c.grid_finetune = to_bool(v); }},
    };
    return keys;
}

const Setter* find_setter(const std::string& key) {
    for (const auto& [name, setter] : registry())
        if (name == key)
            return &setter;
    return nullptr;
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& entry : registry())
            out.push_back(entry.first);
        return out;
    }();
    return keys;
}

void ExperimentConfig::set(const std::string& dotted_key, const std::string& value) {
    const Setter* setter = find_setter(dotted_key);
    if (!setter)
        throw ConfigError("unknown config key '" + dotted_key + "'");
    try {
        (*setter)(*this, value);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad value for '" + dotted_key + "': " + e.what());
    }
}

void ExperimentConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like section.key=value: '" + assignment + "'");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

TrainConfig ExperimentConfig::finetune_config() const {
    TrainConfig c = train;
    c.epochs = finetune_epochs;
    c.labeled_sampler = finetune_labeled_sampler;
    c.unlabeled_sampler = finetune_unlabeled_sampler;
    c.bis.reset();
    return c;
}

TrainConfig ExperimentConfig::bis_config() const {
    TrainConfig c = train;
    c.bis = bis;
    return c;
}

AugmentConfig ExperimentConfig::augment() const {
    AugmentConfig a = AugmentConfig::for_noise(data.noise_sigma);
    if (weak_sigma)
        a.weak_sigma = *weak_sigma;
    if (strong_sigma)
        a.strong_sigma = *strong_sigma;
    if (drop_prob)
        a.drop_prob = *drop_prob;
    return a;
}

void ExperimentConfig::validate() const {
    if (data_path.empty())
        data.validate();
    train.validate();
    finetune_config().validate();
    bis_config().validate();
    const AugmentConfig a = augment();
    if (!(a.weak_sigma >= 0.0) || !(a.strong_sigma >= 0.0))
        throw ConfigError("invalid augment config: sigmas must be >= 0");
    if (!(a.drop_prob >= 0.0 && a.drop_prob <= 1.0))
        throw ConfigError("invalid augment config: drop_prob must lie in [0, 1]");
    if (finetune_epochs < 0)
        throw ConfigError("invalid finetune config: epochs >= 0 required");
}

namespace {

bool known_section(const std::string& name) {
    return std::any_of(config_keys().begin(), config_keys().end(),
                       [&](const std::string& k) { return k.starts_with(name + "."); });
}

// Section headers, checked on the raw text; the INI reader drops empty sections.
void check_section_headers(const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] != '[')
            continue;
        const auto close = line.find(']', first);
        if (close == std::string::npos)
            continue;
        const std::string name = line.substr(first + 1, close - first - 1);
        if (!known_section(name))
            throw ConfigError("unknown config section [" + name + "]");
    }
}

} // namespace

ExperimentConfig load_config(std::istream& in) {
    namespace pt = boost::property_tree;
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    check_section_headers(text);
    pt::ptree tree;
    try {
        std::istringstream body(text);
        pt::read_ini(body, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw ConfigError("config key '" + section + "' must sit under a [section]");
        for (const auto& [key, value] : body)
            cfg.set(section + "." + key, value.data());
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return load_config(in);
}

std::string render_config(const ExperimentConfig& c) {
    auto d = [](double v) { return csv::format_double(v); };
    auto join = [](const auto& items, auto fmt) {
        std::string out;
        for (const auto& it : items) {
            if (!out.empty())
                out += ",";
            out += fmt(it);
        }
        return out;
    };
    std::ostringstream os;
    os << "[data]\n"
       << "k = " << c.data.k << "\n"
       << "n1 = " << c.data.n1 << "\n"
       << "lambda = " << d(c.data.lambda) << "\n"
       << "beta = " << d(c.data.beta) << "\n"
       << "dim = " << c.data.dim << "\n"
       << "class_sep = " << d(c.data.class_sep) << "\n"
       << "noise_sigma = " << d(c.data.noise_sigma) << "\n"
       << "test_per_class = " << c.data.test_per_class << "\n"
       << "seed = " << c.data_seed << "\n";
    if (!c.data_path.empty())
        os << "path = " << c.data_path << "\n";
    const AugmentConfig a = c.augment();
    os << "\n[augment]\n"
       << "weak_sigma = " << d(a.weak_sigma) << "\n"
       << "strong_sigma = " << d(a.strong_sigma) << "\n"
       << "drop_prob = " << d(a.drop_prob) << "\n";
    const TrainConfig& t = c.train;
    os << "\n[train]\n"
       << "epochs = " << t.epochs << "\n"
       << "steps_per_epoch = " << t.steps_per_epoch << "\n"
       << "batch_labeled = " << t.batch_labeled << "\n"
       << "batch_unlabeled = " << t.batch_unlabeled << "\n"
       << "tau = " << d(t.tau) << "\n"
       << "lambda_u = " << d(t.lambda_u) << "\n"
       << "q = " << d(t.q) << "\n"
       << "lr = " << d(t.lr) << "\n"
       << "hidden = " << t.hidden << "\n"
       << "labeled_sampler = " << to_string(t.labeled_sampler) << "\n"
       << "unlabeled_sampler = " << to_string(t.unlabeled_sampler) << "\n"
       << "seed = " << c.train_seed << "\n";
    os << "\n[finetune]\n"
       << "epochs = " << c.finetune_epochs << "\n"
       << "labeled_sampler = " << to_string(c.finetune_labeled_sampler) << "\n"
       << "unlabeled_sampler = " << to_string(c.finetune_unlabeled_sampler) << "\n"
       << "lr_scale = " << d(t.finetune_lr_scale) << "\n"
       << "seed = " << c.finetune_seed << "\n";
    os << "\n[bis]\n"
       << "schedule = " << to_string(c.bis.schedule) << "\n"
       << "sampler_a = " << to_string(c.bis.sampler_a) << "\n"
       << "sampler_b = " << to_string(c.bis.sampler_b) << "\n"
       << "t_max = " << c.bis.t_max << "\n";
    os << "\n[grid]\n"
       << "lambdas = " << join(c.grid_lambdas, d) << "\n"
       << "betas = " << join(c.grid_betas, d) << "\n"
       << "pairs = "
       << join(c.grid_pairs,
               [](const auto& p) {
                   return std::string(to_string(p.first)) + "/" + std::string(to_string(p.second));
               })
       << "\n"
       << "schedules = "
       << (c.grid_schedules.empty()
               ? std::string("none")
               : join(c.grid_schedules, [](ScheduleKind s) { return std::string(to_string(s)); }))
       << "\n";
    if (!c.grid_qs.empty())
        os << "qs = " << join(c.grid_qs, d) << "\n";
    os << "seeds = " << join(c.grid_seeds, [](std::uint64_t s) { return std::to_string(s); })
       << "\n"
       << "finetune = " << (c.grid_finetune ? "true" : "false") << "\n";
    return os.str();
}

} // namespace bislab
