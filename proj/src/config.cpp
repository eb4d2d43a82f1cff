#include "bgk/config.hpp"

#include "bgk/output.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace bgk {

namespace {

using nlohmann::json;

std::string pair_label(std::size_t i, std::size_t j)
{
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

/// Read access to one JSON object that rejects keys outside `allowed`.
class Section {
public:
    Section(const json& node, std::string path, std::initializer_list<const char*> allowed)
        : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            throw ConfigError(path_ + ": expected an object");
        for (const auto& [key, value] : node_.items()) {
            bool known = false;
            for (const char* a : allowed)
                known = known || key == a;
            if (!known)
                throw ConfigError("unknown key \"" + key + "\" in " + path_);
        }
    }

    bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
    const json& at(const char* key) const
    {
        if (!has(key))
            throw ConfigError(where(key) + ": required");
        return node_.at(key);
    }
    std::string where(const std::string& key) const { return path_ + "." + key; }

    double number(const char* key, std::optional<double> fallback = {}) const
    {
        if (!has(key)) {
            if (fallback)
                return *fallback;
            throw ConfigError(where(key) + ": required");
        }
        const json& v = node_.at(key);
        if (!v.is_number())
            throw ConfigError(where(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x))
            throw ConfigError(where(key) + ": must be finite");
        return x;
    }
    double positive(const char* key, std::optional<double> fallback = {}) const
    {
        const double x = number(key, fallback);
        if (!(x > 0.0))
            throw ConfigError(where(key) + ": must be positive");
        return x;
    }
    int integer(const char* key, int fallback) const
    {
        if (!has(key))
            return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer())
            throw ConfigError(where(key) + ": expected an integer");
        return v.get<int>();
    }
    std::string text(const char* key, std::optional<std::string> fallback = {}) const
    {
        if (!has(key)) {
            if (fallback)
                return *fallback;
            throw ConfigError(where(key) + ": required");
        }
        if (!node_.at(key).is_string())
            throw ConfigError(where(key) + ": expected a string");
        return node_.at(key).get<std::string>();
    }
    bool flag(const char* key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        if (!node_.at(key).is_boolean())
            throw ConfigError(where(key) + ": expected true or false");
        return node_.at(key).get<bool>();
    }
    Vec3 vec3(const char* key, std::optional<Vec3> fallback = {}) const
    {
        if (!has(key)) {
            if (fallback)
                return *fallback;
            throw ConfigError(where(key) + ": required");
        }
        const json& v = node_.at(key);
        if (!v.is_array() || v.size() != 3)
            throw ConfigError(where(key) + ": expected an array of three numbers");
        Vec3 out;
        for (int d = 0; d < 3; ++d) {
            if (!v[d].is_number())
                throw ConfigError(where(key) + ": expected an array of three numbers");
            out[d] = v[d].get<double>();
        }
        if (!out.allFinite())
            throw ConfigError(where(key) + ": must be finite");
        return out;
    }

private:
    const json& node_;
    std::string path_;
};

MaxwellianInit parse_maxwellian(const json& node, const std::string& path, bool allow_type)
{
    const Section s = allow_type ? Section(node, path, {"type", "n", "u", "T"}) : Section(node, path, {"n", "u", "T"});
    return {s.positive("n"), s.vec3("u", Vec3::Zero()), s.positive("T")};
}

SpeciesSpec parse_species(const json& node, std::size_t index)
{
    const std::string path = "species[" + std::to_string(index) + "]";
    const Section s(node, path, {"name", "mass", "initial"});
    SpeciesSpec out;
    out.name = s.text("name", "species_" + std::to_string(index + 1));
    out.mass = s.positive("mass");
    const std::string ipath = path + ".initial";
    const json& init = s.at("initial");
    if (!init.is_object() || !init.contains("type"))
        throw ConfigError(ipath + ".type: required");
    if (!init.at("type").is_string())
        throw ConfigError(ipath + ".type: expected a string");
    const std::string type = init.at("type").get<std::string>();
    if (type == "maxwellian") {
        out.initial = parse_maxwellian(init, ipath, true);
    }
    else if (type == "two_maxwellian") {
        const Section t(init, ipath, {"type", "components"});
        const json& comps = t.at("components");
        if (!comps.is_array() || comps.size() != 2)
            throw ConfigError(ipath + ".components: expected exactly two entries");
        out.initial = TwoMaxwellianInit{parse_maxwellian(comps[0], ipath + ".components[0]", false),
                                        parse_maxwellian(comps[1], ipath + ".components[1]", false)};
    }
    else if (type == "tabulated") {
        const Section t(init, ipath, {"type", "file"});
        out.initial = TabulatedInit{t.text("file")};
    }
    else {
        throw ConfigError(ipath + ".type: unknown initial condition \"" + type +
                          "\" (expected maxwellian, two_maxwellian or tabulated)");
    }
    return out;
}

FrequencySpec parse_frequency(const json& node, std::size_t i, std::size_t j)
{
    const std::string path = "frequencies" + pair_label(i, j);
    if (!node.is_object() || !node.contains("model") || !node.at("model").is_string())
        throw ConfigError(path + ".model: required");
    FrequencySpec out;
    out.model = node.at("model").get<std::string>();
    if (out.model == "constant" || out.model == "coulomb_like") {
        const Section s(node, path, {"model", "nu0"});
        out.nu0 = s.positive("nu0");
    }
    else if (out.model == "soft_power_law") {
        const Section s(node, path, {"model", "nu0", "gamma"});
        out.nu0 = s.positive("nu0");
        out.gamma = s.number("gamma");
        if (out.gamma < 0.0)
            throw ConfigError(s.where("gamma") + ": must be nonnegative");
    }
    else if (out.model == "tabulated") {
        const Section s(node, path, {"model", "file"});
        out.file = s.text("file");
    }
    else {
        throw ConfigError(path + ".model: unknown model \"" + out.model +
                          "\" (expected constant, soft_power_law, coulomb_like or tabulated)");
    }
    return out;
}

std::vector<FrequencySpec> parse_frequencies(const json& node, std::size_t n)
{
    if (node.is_object()) {
        // Keyed form: {"1,1": {...}, "1,2": {...}, ...} with 1-based indices.
        for (const auto& [key, value] : node.items()) {
            std::size_t i = 0, j = 0;
            char comma = 0;
            std::istringstream is(key);
            if (!(is >> i >> comma >> j) || comma != ',' || !is.eof() || i < 1 || j < 1 || i > n || j > n)
                throw ConfigError("unknown key \"" + key + "\" in frequencies (expected \"i,j\" with 1 <= i, j <= " +
                                  std::to_string(n) + ")");
        }
        std::vector<FrequencySpec> out;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::string key = std::to_string(i + 1) + "," + std::to_string(j + 1);
                if (!node.contains(key) || node.at(key).is_null())
                    throw ConfigError("frequencies: missing entry for pair " + pair_label(i, j));
                out.push_back(parse_frequency(node.at(key), i, j));
            }
        return out;
    }
    if (!node.is_array())
        throw ConfigError("frequencies: expected an array of rows or an object keyed by \"i,j\"");
    if (node.size() > n)
        throw ConfigError("frequencies: " + std::to_string(node.size()) + " rows for " + std::to_string(n) + " species");
    std::vector<FrequencySpec> out;
    out.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= node.size())
            throw ConfigError("frequencies: missing entry for pair " + pair_label(i, 0));
        const json& row = node[i];
        if (!row.is_array())
            throw ConfigError("frequencies: row " + std::to_string(i + 1) + " must be an array");
        if (row.size() > n)
            throw ConfigError("frequencies: row " + std::to_string(i + 1) + " has more than " + std::to_string(n) +
                              " entries");
        for (std::size_t j = 0; j < n; ++j) {
            if (j >= row.size() || row[j].is_null())
                throw ConfigError("frequencies: missing entry for pair " + pair_label(i, j));
            out.push_back(parse_frequency(row[j], i, j));
        }
    }
    return out;
}

GridSpec parse_grid(const json& node)
{
    GridSpec g;
    if (!node.is_object())
        throw ConfigError("grid: expected an object");
    const std::string mode = node.contains("mode") && node.at("mode").is_string() ? node.at("mode").get<std::string>() : "auto";
    if (mode == "auto") {
        const Section s(node, "grid", {"mode", "c", "n"});
        g.automatic = true;
        g.c = s.positive("c", kDefaultTruncation);
        g.n = s.integer("n", kDefaultNodesPerAxis);
        if (g.n < kMinNodesPerAxis)
            throw ConfigError("grid.n: at least " + std::to_string(kMinNodesPerAxis) + " nodes per axis required");
    }
    else if (mode == "explicit") {
        const Section s(node, "grid", {"mode", "v_min", "v_max", "counts"});
        g.automatic = false;
        g.v_min = s.vec3("v_min");
        g.v_max = s.vec3("v_max");
        const json& c = s.at("counts");
        if (!c.is_array() || c.size() != 3)
            throw ConfigError("grid.counts: expected three integers");
        for (int d = 0; d < 3; ++d) {
            if (!c[d].is_number_integer())
                throw ConfigError("grid.counts: expected three integers");
            g.counts[d] = c[d].get<int>();
        }
        // Let the grid constructor apply its own checks now rather than after file loading.
        try {
            build_grid(g.v_min, g.v_max, g.counts);
        }
        catch (const Error& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }
    else {
        throw ConfigError("grid.mode: unknown mode \"" + mode + "\" (expected auto or explicit)");
    }
    return g;
}

TimeSpec parse_time(const json& node)
{
    const Section s(node, "time", {"dt", "t_final", "scheme"});
    TimeSpec t;
    if (s.has("dt") && !(s.at("dt").is_string() && s.at("dt").get<std::string>() == "auto"))
        t.dt = s.positive("dt");
    t.t_final = s.number("t_final", 1.0);
    if (t.t_final < 0.0)
        throw ConfigError("time.t_final: must be nonnegative");
    const std::string scheme = s.text("scheme", "explicit_euler");
    if (scheme == "explicit_euler")
        t.scheme = TimeScheme::explicit_euler;
    else if (scheme == "semi_implicit")
        t.scheme = TimeScheme::semi_implicit;
    else
        throw ConfigError("time.scheme: unknown scheme \"" + scheme + "\" (expected explicit_euler or semi_implicit)");
    return t;
}

NewtonConfig parse_newton(const json& node)
{
    const Section s(node, "newton", {"grad_tol", "max_iter", "armijo_c", "backtrack_factor", "min_step", "hessian_ridge"});
    const NewtonConfig d;
    NewtonConfig c;
    c.grad_tol = s.number("grad_tol", d.grad_tol);
    c.max_iter = s.integer("max_iter", d.max_iter);
    c.armijo_c = s.number("armijo_c", d.armijo_c);
    c.backtrack_factor = s.number("backtrack_factor", d.backtrack_factor);
    c.min_step = s.number("min_step", d.min_step);
    c.hessian_ridge = s.number("hessian_ridge", d.hessian_ridge);
    try {
        c.validate();
    }
    catch (const ConfigError& e) {
        throw ConfigError(std::string("newton: ") + e.what());
    }
    return c;
}

OutputSpec parse_output(const json& node)
{
    const Section s(node, "output", {"interval", "timeseries", "snapshot", "snapshot_prefix"});
    OutputSpec o;
    o.interval = s.integer("interval", o.interval);
    if (o.interval < 1)
        throw ConfigError("output.interval: must be at least 1");
    o.timeseries = s.text("timeseries", o.timeseries.string());
    o.snapshot = s.flag("snapshot", o.snapshot);
    o.snapshot_prefix = s.text("snapshot_prefix", o.snapshot_prefix);
    return o;
}

json maxwellian_json(const MaxwellianInit& m)
{
    return {{"n", m.n}, {"u", {m.u[0], m.u[1], m.u[2]}}, {"T", m.T}};
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

std::filesystem::path resolve(const RunConfig& cfg, const std::filesystem::path& p)
{
    return p.is_absolute() || cfg.base_dir.empty() ? p : cfg.base_dir / p;
}

Field load_on_grid(const std::filesystem::path& file, const VelocityGrid& grid, const std::string& what)
{
    const Snapshot snap = read_snapshot(file);
    if (!snap.grid.same_layout(grid))
        throw ConfigError(what + ": grid of " + file.string() + " does not match the configured grid");
    return snap.values;
}

} // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    }
    catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    const Section top(doc, "config", {"species", "frequencies", "grid", "time", "newton", "output"});

    RunConfig cfg;
    cfg.base_dir = base_dir;
    const json& species = top.at("species");
    if (!species.is_array() || species.empty())
        throw ConfigError("species: expected a nonempty array");
    for (std::size_t i = 0; i < species.size(); ++i)
        cfg.species.push_back(parse_species(species[i], i));
    for (std::size_t i = 0; i < cfg.species.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (cfg.species[i].name == cfg.species[j].name)
                throw ConfigError("species: duplicate name \"" + cfg.species[i].name + "\"");

    cfg.frequencies = parse_frequencies(top.at("frequencies"), cfg.species.size());
    cfg.grid = top.has("grid") ? parse_grid(top.at("grid")) : GridSpec{};
    cfg.time = top.has("time") ? parse_time(top.at("time")) : TimeSpec{};
    cfg.newton = top.has("newton") ? parse_newton(top.at("newton")) : NewtonConfig{};
    cfg.output = top.has("output") ? parse_output(top.at("output")) : OutputSpec{};
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad())
        throw IoError("cannot read config file " + path.string());
    return parse_config(buf.str(), path.parent_path());
}

std::string echo_config(const RunConfig& cfg)
{
    json species = json::array();
    for (const SpeciesSpec& s : cfg.species) {
        json init;
        if (const auto* m = std::get_if<MaxwellianInit>(&s.initial)) {
            init = maxwellian_json(*m);
            init["type"] = "maxwellian";
        }
        else if (const auto* two = std::get_if<TwoMaxwellianInit>(&s.initial)) {
            init = {{"type", "two_maxwellian"},
                    {"components", json::array({maxwellian_json(two->first), maxwellian_json(two->second)})}};
        }
        else {
            init = {{"type", "tabulated"}, {"file", std::get<TabulatedInit>(s.initial).file.string()}};
        }
        species.push_back({{"name", s.name}, {"mass", s.mass}, {"initial", init}});
    }

    const std::size_t n = cfg.species.size();
    json freq = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < n; ++j) {
            const FrequencySpec& f = cfg.frequencies[i * n + j];
            json e = {{"model", f.model}};
            if (f.model == "tabulated") {
                e["file"] = f.file.string();
            }
            else {
                e["nu0"] = f.nu0;
                if (f.model == "soft_power_law")
                    e["gamma"] = f.gamma;
            }
            row.push_back(e);
        }
        freq.push_back(row);
    }

    json grid;
    if (cfg.grid.automatic)
        grid = {{"mode", "auto"}, {"c", cfg.grid.c}, {"n", cfg.grid.n}};
    else
        grid = {{"mode", "explicit"},
                {"v_min", vec_json(cfg.grid.v_min)},
                {"v_max", vec_json(cfg.grid.v_max)},
                {"counts", cfg.grid.counts}};

    json time = {{"t_final", cfg.time.t_final}, {"scheme", to_string(cfg.time.scheme)}};
    time["dt"] = cfg.time.dt ? json(*cfg.time.dt) : json("auto");

    const NewtonConfig& nc = cfg.newton;
    json newton = {{"grad_tol", nc.grad_tol},           {"max_iter", nc.max_iter}, {"armijo_c", nc.armijo_c},
                   {"backtrack_factor", nc.backtrack_factor}, {"min_step", nc.min_step}, {"hessian_ridge", nc.hessian_ridge}};

    json output = {{"interval", cfg.output.interval},
                   {"timeseries", cfg.output.timeseries.string()},
                   {"snapshot", cfg.output.snapshot},
                   {"snapshot_prefix", cfg.output.snapshot_prefix}};

    json doc = {{"species", species}, {"frequencies", freq}, {"grid", grid},
                {"time", time},       {"newton", newton},    {"output", output}};
    return doc.dump(2) + "\n";
}

MixtureState build_initial_state(const RunConfig& cfg)
{
    const std::size_t n = cfg.species.size();
    if (n == 0 || cfg.frequencies.size() != n * n)
        throw ConfigError("config has no species or an incomplete frequency matrix");

    std::shared_ptr<const VelocityGrid> grid;
    if (!cfg.grid.automatic) {
        grid = std::make_shared<const VelocityGrid>(cfg.grid.v_min, cfg.grid.v_max, cfg.grid.counts);
    }
    else {
        // A tabulated input fixes the grid; otherwise cover every initial component and the
        // common equilibrium that conservation predicts for the analytic initial data.
        for (const SpeciesSpec& s : cfg.species)
            if (const auto* tab = std::get_if<TabulatedInit>(&s.initial)) {
                grid = std::make_shared<const VelocityGrid>(read_snapshot(resolve(cfg, tab->file)).grid);
                break;
            }
        if (!grid) {
            std::vector<ThermalSpec> specs;
            double rho = 0.0, number = 0.0, energy = 0.0;
            Vec3 momentum = Vec3::Zero();
            auto add = [&](const MaxwellianInit& m, double mass) {
                specs.push_back({m.u, m.T, mass});
                rho += mass * m.n;
                number += m.n;
                momentum += mass * m.n * m.u;
                energy += 0.5 * mass * m.n * m.u.squaredNorm() + 1.5 * m.n * m.T;
            };
            for (const SpeciesSpec& s : cfg.species) {
                if (const auto* m = std::get_if<MaxwellianInit>(&s.initial)) {
                    add(*m, s.mass);
                }
                else {
                    const auto& two = std::get<TwoMaxwellianInit>(s.initial);
                    add(two.first, s.mass);
                    add(two.second, s.mass);
                }
            }
            const Vec3 u_eq = momentum / rho;
            const double T_eq = (energy - 0.5 * rho * u_eq.squaredNorm()) / (1.5 * number);
            for (const SpeciesSpec& s : cfg.species)
                specs.push_back({u_eq, T_eq, s.mass});
            const VelocityBounds b = auto_bounds(specs, cfg.grid.c);
            grid = std::make_shared<const VelocityGrid>(b.v_min, b.v_max, std::array<int, 3>{cfg.grid.n, cfg.grid.n, cfg.grid.n});
        }
    }

    std::vector<Species> species;
    std::vector<Field> f;
    for (std::size_t i = 0; i < n; ++i) {
        const SpeciesSpec& s = cfg.species[i];
        species.push_back({s.name, s.mass, int(i)});
        if (const auto* m = std::get_if<MaxwellianInit>(&s.initial))
            f.push_back(maxwellian(m->n, m->u, m->T, s.mass, *grid));
        else if (const auto* two = std::get_if<TwoMaxwellianInit>(&s.initial))
            f.push_back(maxwellian(two->first.n, two->first.u, two->first.T, s.mass, *grid) +
                        maxwellian(two->second.n, two->second.u, two->second.T, s.mass, *grid));
        else
            f.push_back(load_on_grid(resolve(cfg, std::get<TabulatedInit>(s.initial).file), *grid,
                                     "species " + s.name));
    }

    std::vector<FrequencyModel> models;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const FrequencySpec& fs = cfg.frequencies[i * n + j];
            if (fs.model == "constant")
                models.emplace_back(ConstantFrequency{fs.nu0});
            else if (fs.model == "soft_power_law")
                models.emplace_back(SoftPowerLawFrequency{fs.nu0, fs.gamma});
            else if (fs.model == "coulomb_like")
                models.emplace_back(CoulombLikeFrequency{fs.nu0});
            else
                models.emplace_back(TabulatedFrequency{load_on_grid(resolve(cfg, fs.file), *grid,
                                                                    "frequency " + pair_label(i, j))});
        }
    return make_state(grid, std::move(species), std::move(f), models);
}

} // namespace bgk
