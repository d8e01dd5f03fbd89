#include "openima/config.hpp"

#include <fstream>
#include <sstream>

namespace openima {

Variant variant_from_string(const std::string& name) {
    if (name == "openima") return Variant::OpenIMA;
    if (name == "infonce") return Variant::InfoNCE;
    if (name == "infonce+supcon") return Variant::InfoNCESupCon;
    if (name == "infonce+supcon+ce") return Variant::InfoNCESupConCE;
    if (name == "ce") return Variant::CEOnly;
    throw ConfigError("unknown variant '" + name +
                      "' (expected openima, infonce, infonce+supcon, infonce+supcon+ce, ce)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::OpenIMA: return "OpenIMA";
        case Variant::InfoNCE: return "InfoNCE";
        case Variant::InfoNCESupCon: return "InfoNCE+SupCon";
        case Variant::InfoNCESupConCE: return "InfoNCE+SupCon+CE";
        case Variant::CEOnly: return "CE";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (use_sbm) {
        try {
            sbm.validate();
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    } else if (edges_path.empty() || features_path.empty() || labels_path.empty()) {
        throw ConfigError("file dataset needs edges, features and labels paths");
    }
    if (!(seen_fraction > 0.0 && seen_fraction <= 1.0))
        throw ConfigError("seen_fraction must be in (0, 1]");
    if (labeled_per_class < 1) throw ConfigError("labeled_per_class must be >= 1");
    if (val_per_class < 0) throw ConfigError("val_per_class must be >= 0");
    if (layers < 1 || layers > 2) throw ConfigError("layers must be 1 or 2");
    if (heads < 1) throw ConfigError("heads must be >= 1");
    if (hidden < 1 || hidden % heads != 0)
        throw ConfigError("hidden must be a positive multiple of heads");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    if (eta < 0.0) throw ConfigError("eta must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(rho > 0.0 && rho <= 100.0)) throw ConfigError("rho must be in (0, 100]");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (refresh_period < 1) throw ConfigError("refresh_period must be >= 1");
    if (novel_count < 0) throw ConfigError("novel_count must be >= 0");
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

long parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

double parse_float(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a float, got '" + v + "'");
    }
}

}  // namespace

void apply_config_entry(ExperimentConfig& c, const std::string& key,
                        const std::string& value) {
    if (key == "dataset") {
        if (value == "sbm")
            c.use_sbm = true;
        else if (value == "files")
            c.use_sbm = false;
        else
            throw ConfigError("dataset must be 'sbm' or 'files'");
    } else if (key == "edges") c.edges_path = value;
    else if (key == "features") c.features_path = value;
    else if (key == "labels") c.labels_path = value;
    else if (key == "data_seed") c.data_seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "sbm_classes") c.sbm.classes = static_cast<int>(parse_int(value, key));
    else if (key == "sbm_nodes_per_class")
        c.sbm.nodes_per_class = static_cast<int>(parse_int(value, key));
    else if (key == "sbm_p_in") c.sbm.p_in = parse_float(value, key);
    else if (key == "sbm_p_out") c.sbm.p_out = parse_float(value, key);
    else if (key == "sbm_feature_dim") c.sbm.feature_dim = static_cast<int>(parse_int(value, key));
    else if (key == "sbm_center_scale") c.sbm.center_scale = parse_float(value, key);
    else if (key == "sbm_noise_scale") c.sbm.noise_scale = parse_float(value, key);
    else if (key == "seen_fraction") c.seen_fraction = parse_float(value, key);
    else if (key == "labeled_per_class") c.labeled_per_class = static_cast<int>(parse_int(value, key));
    else if (key == "val_per_class") c.val_per_class = static_cast<int>(parse_int(value, key));
    else if (key == "layers") c.layers = static_cast<int>(parse_int(value, key));
    else if (key == "heads") c.heads = static_cast<int>(parse_int(value, key));
    else if (key == "hidden") c.hidden = static_cast<int>(parse_int(value, key));
    else if (key == "dropout") c.dropout = parse_float(value, key);
    else if (key == "mean_aggregation") c.mean_aggregation = parse_bool(value, key);
    else if (key == "eta") c.eta = parse_float(value, key);
    else if (key == "tau") c.tau = parse_float(value, key);
    else if (key == "rho") c.rho = parse_float(value, key);
    else if (key == "variant") c.variant = variant_from_string(value);
    else if (key == "learning_rate") c.learning_rate = parse_float(value, key);
    else if (key == "weight_decay") c.weight_decay = parse_float(value, key);
    else if (key == "epochs") c.epochs = static_cast<int>(parse_int(value, key));
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(value, key));
    else if (key == "refresh_period") c.refresh_period = static_cast<int>(parse_int(value, key));
    else if (key == "novel_count") c.novel_count = static_cast<int>(parse_int(value, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "out_dir") c.out_dir = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not readable: " + path);
    ExperimentConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_config_entry(c, trim(key), trim(value));
    }
    return c;
}

}  // namespace openima
