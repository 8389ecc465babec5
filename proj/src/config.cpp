#include "genhints/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace genhints {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        out[key] = value;
    }
    return out;
}

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string canonical_config_text(const ConfigMap& config) {
    std::string out;
    for (const auto& [k, v] : config) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::string config_hash(const ConfigMap& config) {
    const std::string text = canonical_config_text(config);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ConfigMap default_config() {
    return {
        {"task.image_side", "16"},
        {"task.num_classes", "4"},
        {"data.n_train", "2000"},
        {"data.n_test", "2000"},
        {"data.seed", "424242"},
        {"data.dir", ""},
        {"run.mode", "both"},  // baseline | hints | both
        {"training.epochs", "20"},
        {"training.batch_size", "32"},
        {"training.learning_rate", "0.001"},
        {"training.weight_decay", "0.01"},
        {"training.alpha", "50.0"},
        {"training.temperature", "0.8"},
        {"training.loss_variant", "symmetric_kl"},
        {"training.scheduler", "cosine"},
        {"training.checkpoint_count", "120"},
        {"training.hint_only", "false"},
        {"training.seeds", "1,2,3,4,5"},
        // baseline augmentation, flip applied half the time
        {"aug.flip_probability", "0.5"},
        {"aug.max_translate_fraction", "0.05"},
        // rotation "0-5%" read as 5% of a full turn = 18 degrees
        {"aug.max_rotate_degrees", "18"},
        // hint path uses the same transforms with flip probability 1
        {"hint.flip_probability", "1.0"},
        {"hint.max_translate_fraction", "0.05"},
        {"hint.max_rotate_degrees", "18"},
        {"sampler.kind", "true_distribution"},
        {"sampler.bandwidth", "0.0"},
        {"sampler.seed", "7"},
        {"eval.real_slice", "256"},
        {"eval.virtual_batch", "256"},
        {"eval.temperature", "1.0"},
        {"sweep.alphas", "0.1,0.5,1,5,10,25,50"},
        {"study.bandwidths", "0,0.05,0.1,0.2,0.5,1.0"},
        {"study.epochs", "5"},
        {"study.n_samples", "1024"},
        {"study.embedder_seed", "12345"},
    };
}

ConfigMap resolve_config(const ConfigMap& config) {
    ConfigMap resolved = default_config();
    std::string unknown;
    for (const auto& [k, v] : config) {
        if (!resolved.count(k)) {
            if (!unknown.empty()) unknown += ", ";
            unknown += k;
            continue;
        }
        resolved[k] = v;
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
    return resolved;
}

namespace {

const std::string& lookup(const ConfigMap& c, const std::string& key) {
    auto it = c.find(key);
    if (it == c.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

}  // namespace

double config_double(const ConfigMap& c, const std::string& key) {
    const std::string& v = lookup(c, key);
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: '" + v + "'");
    }
}

long config_long(const ConfigMap& c, const std::string& key) {
    const std::string& v = lookup(c, key);
    try {
        size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: '" + v + "'");
    }
}

bool config_bool(const ConfigMap& c, const std::string& key) {
    const std::string& v = lookup(c, key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key " + key + ": expected true/false, got '" + v + "'");
}

std::vector<double> config_double_list(const ConfigMap& c, const std::string& key) {
    const std::string& v = lookup(c, key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": bad list element '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
}

std::vector<uint64_t> config_seed_list(const ConfigMap& c, const std::string& key) {
    const std::string& v = lookup(c, key);
    std::vector<uint64_t> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": bad seed '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty seed list");
    return out;
}

}  // namespace genhints
