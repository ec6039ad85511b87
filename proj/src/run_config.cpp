#include "pamrecon/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "pamrecon/errors.hpp"

namespace fs = std::filesystem;

namespace pam {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("invalid number '" + text + "'");
    return value;
}

std::size_t parse_count(const std::string& text) {
    if (!text.empty() && text[0] == '-')
        throw ConfigError("expected a non-negative integer, got '" + text + "'");
    return parse_number<std::size_t>(text);
}

int parse_positive_int(const std::string& text) {
    const int v = parse_number<int>(text);
    if (v < 1)
        throw ConfigError("expected a positive integer, got '" + text + "'");
    return v;
}

std::array<double, 3> parse_split(const std::string& text) {
    std::array<double, 3> out{};
    std::stringstream ss(text);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i == 3)
            throw ConfigError("split takes three comma-separated fractions");
        out[i++] = parse_number<double>(trim(part));
    }
    if (i != 3)
        throw ConfigError("split takes three comma-separated fractions");
    split_sizes(1, out); // validates sign and sum
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"architecture", [](RunConfig& c, const std::string& v) { c.model.architecture = nn::parse_architecture(v); }},
        {"depth", [](RunConfig& c, const std::string& v) { c.model.depth = parse_positive_int(v); }},
        {"base_filters", [](RunConfig& c, const std::string& v) { c.model.base_filters = parse_positive_int(v); }},
        {"dense_layers", [](RunConfig& c, const std::string& v) { c.model.dense_layers = parse_positive_int(v); }},
        {"bn_momentum", [](RunConfig& c, const std::string& v) { c.model.bn_momentum = parse_number<double>(v); }},
        {"bn_epsilon", [](RunConfig& c, const std::string& v) { c.model.bn_epsilon = parse_number<double>(v); }},
        {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_count(v); }},
        {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_count(v); }},
        {"max_steps", [](RunConfig& c, const std::string& v) { c.train.max_steps = parse_count(v); }},
        {"learning_rate", [](RunConfig& c, const std::string& v) { c.train.lr = parse_number<double>(v); }},
        {"beta1", [](RunConfig& c, const std::string& v) { c.train.beta1 = parse_number<double>(v); }},
        {"beta2", [](RunConfig& c, const std::string& v) { c.train.beta2 = parse_number<double>(v); }},
        {"adam_epsilon", [](RunConfig& c, const std::string& v) { c.train.adam_epsilon = parse_number<double>(v); }},
        {"lambda_mae", [](RunConfig& c, const std::string& v) { c.train.lambda1 = parse_number<double>(v); }},
        {"lambda_fmae", [](RunConfig& c, const std::string& v) { c.train.lambda2 = parse_number<double>(v); }},
        {"ratio", [](RunConfig& c, const std::string& v) {
             try {
                 c.train.ratio = parse_ratio(v);
             } catch (const std::exception& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"crops_per_image", [](RunConfig& c, const std::string& v) {
             c.train.crops_per_image = c.augment.crops_per_image = parse_count(v);
         }},
        {"val_crops", [](RunConfig& c, const std::string& v) { c.train.val_crops = parse_count(v); }},
        {"split", [](RunConfig& c, const std::string& v) {
             try {
                 c.train.split = parse_split(v);
             } catch (const InvalidInput& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"crop_size", [](RunConfig& c, const std::string& v) { c.augment.crop = parse_count(v); }},
        {"max_rotation_deg", [](RunConfig& c, const std::string& v) { c.augment.max_rotation_deg = parse_number<double>(v); }},
        {"max_shift_frac", [](RunConfig& c, const std::string& v) { c.augment.max_shift_frac = parse_number<double>(v); }},
        {"max_shear", [](RunConfig& c, const std::string& v) { c.augment.max_shear = parse_number<double>(v); }},
        {"noise_prob", [](RunConfig& c, const std::string& v) { c.augment.noise_prob = parse_number<double>(v); }},
        {"noise_sigma", [](RunConfig& c, const std::string& v) { c.augment.noise_sigma = parse_number<double>(v); }},
        {"seed", [](RunConfig& c, const std::string& v) { apply_seed(c, parse_number<std::uint64_t>(v)); }},
        {"dataset", [](RunConfig& c, const std::string& v) { c.dataset = v; }},
        {"phantom_count", [](RunConfig& c, const std::string& v) { c.phantom_count = parse_count(v); }},
        {"phantom_size", [](RunConfig& c, const std::string& v) { c.phantom_size = parse_count(v); }},
        {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
        {"resume", [](RunConfig& c, const std::string& v) { c.resume = v; }},
    };
    return table;
}

void check(const RunConfig& c) {
    nn::validate(c.model);
    if (c.train.batch_size == 0)
        throw ConfigError("batch_size must be >= 1");
    if (c.train.crops_per_image == 0)
        throw ConfigError("crops_per_image must be >= 1");
    if (!(c.train.lr > 0.0))
        throw ConfigError("learning_rate must be > 0");
    if (!(c.train.beta1 >= 0.0 && c.train.beta1 < 1.0 && c.train.beta2 >= 0.0 && c.train.beta2 < 1.0))
        throw ConfigError("beta1 and beta2 must be in [0, 1)");
    if (!(c.train.adam_epsilon > 0.0))
        throw ConfigError("adam_epsilon must be > 0");
    if (c.train.lambda1 < 0.0 || c.train.lambda2 < 0.0)
        throw ConfigError("loss weights must be >= 0");
    const auto multiple = static_cast<std::size_t>(1) << (c.model.depth - 1);
    if (c.augment.crop == 0 || c.augment.crop % multiple != 0)
        throw ConfigError("crop_size " + std::to_string(c.augment.crop) + " must be a positive multiple of " +
                          std::to_string(multiple) + " for depth " + std::to_string(c.model.depth));
    if (c.augment.noise_prob < 0.0 || c.augment.noise_prob > 1.0)
        throw ConfigError("noise_prob must be in [0, 1]");
    if (c.dataset == "phantom" && c.phantom_size < std::max<std::size_t>(128, c.augment.crop))
        throw ConfigError("phantom_size must be >= 128 and >= crop_size");
}

} // namespace

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.train.seed = seed;
    cfg.augment.seed = seed;
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir) {
    RunConfig cfg;
    std::string line;
    std::map<std::string, std::size_t> seen;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto where = "config line " + std::to_string(number);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(where + ": unknown key '" + key + "'");
        if (auto [prev, fresh] = seen.emplace(key, number); !fresh)
            throw ConfigError(where + ": key '" + key + "' already set on line " + std::to_string(prev->second));
        if (value.empty())
            throw ConfigError(where + ": key '" + key + "' has no value");
        try {
            it->second(cfg, value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + ", key '" + key + "': " + e.what());
        }
    }
    check(cfg);
    if (!base_dir.empty()) {
        if (!cfg.dataset.empty() && cfg.dataset != "phantom" && fs::path(cfg.dataset).is_relative())
            cfg.dataset = (base_dir / cfg.dataset).string();
        if (cfg.output_dir.is_relative())
            cfg.output_dir = base_dir / cfg.output_dir;
        if (!cfg.resume.empty() && cfg.resume.is_relative())
            cfg.resume = base_dir / cfg.resume;
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    return parse_run_config(in, path.parent_path());
}

void format_run_config(std::ostream& out, const RunConfig& c) {
    out.precision(17);
    out << "architecture = " << nn::to_string(c.model.architecture) << '\n'
        << "depth = " << c.model.depth << '\n'
        << "base_filters = " << c.model.base_filters << '\n'
        << "dense_layers = " << c.model.dense_layers << '\n'
        << "bn_momentum = " << c.model.bn_momentum << '\n'
        << "bn_epsilon = " << c.model.bn_epsilon << '\n'
        << "batch_size = " << c.train.batch_size << '\n'
        << "epochs = " << c.train.epochs << '\n'
        << "max_steps = " << c.train.max_steps << '\n'
        << "learning_rate = " << c.train.lr << '\n'
        << "beta1 = " << c.train.beta1 << '\n'
        << "beta2 = " << c.train.beta2 << '\n'
        << "adam_epsilon = " << c.train.adam_epsilon << '\n'
        << "lambda_mae = " << c.train.lambda1 << '\n'
        << "lambda_fmae = " << c.train.lambda2 << '\n'
        << "ratio = " << format_ratio(c.train.ratio) << '\n'
        << "crops_per_image = " << c.train.crops_per_image << '\n'
        << "val_crops = " << c.train.val_crops << '\n'
        << "split = " << c.train.split[0] << ',' << c.train.split[1] << ',' << c.train.split[2] << '\n'
        << "crop_size = " << c.augment.crop << '\n'
        << "max_rotation_deg = " << c.augment.max_rotation_deg << '\n'
        << "max_shift_frac = " << c.augment.max_shift_frac << '\n'
        << "max_shear = " << c.augment.max_shear << '\n'
        << "noise_prob = " << c.augment.noise_prob << '\n'
        << "noise_sigma = " << c.augment.noise_sigma << '\n'
        << "seed = " << c.seed << '\n';
    if (!c.dataset.empty())
        out << "dataset = " << c.dataset << '\n';
    out << "phantom_count = " << c.phantom_count << '\n'
        << "phantom_size = " << c.phantom_size << '\n'
        << "output_dir = " << c.output_dir.string() << '\n';
    if (!c.resume.empty())
        out << "resume = " << c.resume.string() << '\n';
}

PhantomConfig phantom_config(const RunConfig& cfg, std::size_t index) {
    PhantomConfig p;
    p.height = p.width = cfg.phantom_size;
    p.seed = cfg.seed * 1000003ULL + index;
    return p;
}

} // namespace pam
