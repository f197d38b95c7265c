// nabct: experiment driver for the adaptive binning CT toolkit.
//
// Subcommands: phantom, project, reconstruct, eval, gradcheck, sweep.
// Every command prints its fully resolved configuration as JSON; reconstruct
// additionally writes the echo next to its outputs so a run can be repeated
// from the artifacts alone.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error,
// 3 numerical abort.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nab/nab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// ---------------------------------------------------------------------------
// config handling

struct GeometrySpec {
    std::string sidecar;  // file path; empty when inline
    std::size_t views = 16;
    std::size_t detectors = 0;  // 0 -> default for the grid
    double spacing = 0.0;       // 0 -> default for the grid
};

struct RunConfig {
    std::string method = "nab";
    std::size_t epochs = 3000;
    std::uint64_t seed = 1;
    std::size_t grid_height = 64;
    std::size_t grid_width = 64;
    std::size_t bins = 128;
    std::vector<double> steepness_set = {25.0, 50.0, 75.0};
    std::vector<std::size_t> hidden_sizes = {64, 64, 64};
    nab::LearningRates lr;
    std::vector<std::string> freeze;
    std::vector<std::size_t> checkpoint_epochs;
    std::string precision = "single";
    bool deterministic = false;
    int threads = 0;
    std::size_t sirt_iterations = 200;
    std::string sinogram;
    GeometrySpec geometry;
    std::string output_dir = "out";
    std::string phantom_preset;
    double phantom_angle = 0.0;
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (allowed.count(key) == 0) {
            throw std::invalid_argument("unknown key '" + key + "' in " + where);
        }
    }
}

nab::FreezeMask freeze_mask_from_names(const std::vector<std::string>& names) {
    nab::FreezeMask mask;
    for (const std::string& name : names) {
        if (name == "net") {
            mask.net = true;
        } else if (name == "center") {
            mask.center = true;
        } else if (name == "side") {
            mask.side = true;
        } else if (name == "theta") {
            mask.theta = true;
        } else if (name == "k") {
            mask.k = true;
        } else if (name == "lambda") {
            mask.lambda = true;
        } else {
            throw std::invalid_argument("unknown freeze group '" + name + "'");
        }
    }
    return mask;
}

void parse_geometry_value(const json& value, GeometrySpec& geom) {
    if (value.is_string()) {
        geom.sidecar = value.get<std::string>();
        return;
    }
    if (!value.is_object()) {
        throw std::invalid_argument("'geometry' must be a sidecar path or an object");
    }
    check_keys(value, {"views", "detectors", "spacing"}, "geometry");
    geom.sidecar.clear();
    if (value.contains("views")) geom.views = value["views"].get<std::size_t>();
    if (value.contains("detectors")) geom.detectors = value["detectors"].get<std::size_t>();
    if (value.contains("spacing")) geom.spacing = value["spacing"].get<double>();
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    check_keys(j,
               {"method", "epochs", "seed", "grid", "bins", "steepness_set", "hidden_sizes",
                "learning_rates", "freeze", "checkpoint_epochs", "precision", "deterministic",
                "threads", "sirt_iterations", "sinogram", "geometry", "output_dir", "phantom"},
               path);

    RunConfig cfg;
    if (j.contains("method")) cfg.method = j["method"].get<std::string>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("grid")) {
        check_keys(j["grid"], {"height", "width"}, "grid");
        if (j["grid"].contains("height")) cfg.grid_height = j["grid"]["height"].get<std::size_t>();
        if (j["grid"].contains("width")) cfg.grid_width = j["grid"]["width"].get<std::size_t>();
    }
    if (j.contains("bins")) cfg.bins = j["bins"].get<std::size_t>();
    if (j.contains("steepness_set")) cfg.steepness_set = j["steepness_set"].get<std::vector<double>>();
    if (j.contains("hidden_sizes")) {
        cfg.hidden_sizes = j["hidden_sizes"].get<std::vector<std::size_t>>();
    }
    if (j.contains("learning_rates")) {
        const json& lr = j["learning_rates"];
        check_keys(lr, {"net", "center", "side", "theta", "k", "lambda"}, "learning_rates");
        if (lr.contains("net")) cfg.lr.net = lr["net"].get<double>();
        if (lr.contains("center")) cfg.lr.center = lr["center"].get<double>();
        if (lr.contains("side")) cfg.lr.side = lr["side"].get<double>();
        if (lr.contains("theta")) cfg.lr.theta = lr["theta"].get<double>();
        if (lr.contains("k")) cfg.lr.k = lr["k"].get<double>();
        if (lr.contains("lambda")) cfg.lr.lambda = lr["lambda"].get<double>();
    }
    if (j.contains("freeze")) cfg.freeze = j["freeze"].get<std::vector<std::string>>();
    if (j.contains("checkpoint_epochs")) {
        cfg.checkpoint_epochs = j["checkpoint_epochs"].get<std::vector<std::size_t>>();
    }
    if (j.contains("precision")) cfg.precision = j["precision"].get<std::string>();
    if (j.contains("deterministic")) cfg.deterministic = j["deterministic"].get<bool>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("sirt_iterations")) {
        cfg.sirt_iterations = j["sirt_iterations"].get<std::size_t>();
    }
    if (j.contains("sinogram")) cfg.sinogram = j["sinogram"].get<std::string>();
    if (j.contains("geometry")) parse_geometry_value(j["geometry"], cfg.geometry);
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("phantom")) {
        check_keys(j["phantom"], {"preset", "angle"}, "phantom");
        if (j["phantom"].contains("preset")) {
            cfg.phantom_preset = j["phantom"]["preset"].get<std::string>();
        }
        if (j["phantom"].contains("angle")) {
            cfg.phantom_angle = j["phantom"]["angle"].get<double>();
        }
    }
    return cfg;
}

json echo_run_config(const RunConfig& cfg) {
    json j;
    j["method"] = cfg.method;
    j["epochs"] = cfg.epochs;
    j["seed"] = cfg.seed;
    j["grid"] = {{"height", cfg.grid_height}, {"width", cfg.grid_width}};
    j["bins"] = cfg.bins;
    j["steepness_set"] = cfg.steepness_set;
    j["hidden_sizes"] = cfg.hidden_sizes;
    j["learning_rates"] = {{"net", cfg.lr.net},     {"center", cfg.lr.center},
                           {"side", cfg.lr.side},   {"theta", cfg.lr.theta},
                           {"k", cfg.lr.k},         {"lambda", cfg.lr.lambda}};
    j["freeze"] = cfg.freeze;
    j["checkpoint_epochs"] = cfg.checkpoint_epochs;
    j["precision"] = cfg.precision;
    j["deterministic"] = cfg.deterministic;
    j["threads"] = cfg.threads;
    j["sirt_iterations"] = cfg.sirt_iterations;
    if (!cfg.sinogram.empty()) j["sinogram"] = cfg.sinogram;
    if (!cfg.geometry.sidecar.empty()) {
        j["geometry"] = cfg.geometry.sidecar;
    } else {
        j["geometry"] = {{"views", cfg.geometry.views},
                         {"detectors", cfg.geometry.detectors},
                         {"spacing", cfg.geometry.spacing}};
    }
    j["output_dir"] = cfg.output_dir;
    if (!cfg.phantom_preset.empty()) {
        j["phantom"] = {{"preset", cfg.phantom_preset}, {"angle", cfg.phantom_angle}};
    }
    return j;
}

void apply_seed_env(RunConfig& cfg) {
    const char* env = std::getenv("NAB_SEED");
    if (env == nullptr) return;
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw std::invalid_argument(std::string("NAB_SEED is not an integer: ") + env);
    }
    cfg.seed = value;
}

// ---------------------------------------------------------------------------
// geometry sidecar

void save_geometry(const nab::ScanGeometry& geom, const std::string& path) {
    json j;
    j["detectors"] = geom.detectors;
    j["spacing"] = geom.spacing;
    j["angles"] = geom.angles;
    std::ofstream out(path);
    if (!out) throw nab::format_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

nab::ScanGeometry load_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open geometry: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw nab::format_error("geometry parse error in " + path + ": " + e.what());
    }
    check_keys(j, {"detectors", "spacing", "angles"}, path);
    nab::ScanGeometry geom;
    geom.detectors = j.at("detectors").get<std::size_t>();
    geom.spacing = j.at("spacing").get<double>();
    geom.angles = j.at("angles").get<std::vector<double>>();
    nab::require(geom.detectors > 0 && geom.spacing > 0.0 && !geom.angles.empty(),
                 "geometry sidecar must have positive detectors, spacing and angles");
    return geom;
}

nab::ScanGeometry resolve_geometry(const GeometrySpec& spec, std::size_t height,
                                   std::size_t width) {
    if (!spec.sidecar.empty()) return load_geometry(spec.sidecar);
    nab::require(spec.views >= 1, "geometry must have at least one view");
    nab::ScanGeometry geom = nab::default_geometry(height, width, spec.views);
    if (spec.detectors > 0) geom.detectors = spec.detectors;
    if (spec.spacing > 0.0) geom.spacing = spec.spacing;
    return geom;
}

// ---------------------------------------------------------------------------
// small helpers

void write_loss_csv(const std::vector<double>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw nab::format_error("cannot open for writing: " + path);
    out << "epoch,loss\n";
    out.precision(17);
    for (std::size_t i = 0; i < curve.size(); ++i) out << (i + 1) << "," << curve[i] << "\n";
}

void write_residual_csv(const std::vector<double>& residuals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw nab::format_error("cannot open for writing: " + path);
    out << "iteration,residual\n";
    out.precision(17);
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        out << (i + 1) << "," << residuals[i] << "\n";
    }
}

std::string epoch_file_name(std::size_t epoch) {
    return "checkpoint_" + std::to_string(epoch) + ".f64r";
}

template <typename T>
nab::Sinogram<T> to_sinogram(const nab::Sinogram<double>& sino) {
    nab::Sinogram<T> out(sino.rows, sino.cols);
    out.values.assign(sino.values.begin(), sino.values.end());
    return out;
}

// ---------------------------------------------------------------------------
// phantom

int cmd_phantom(const std::string& preset, std::size_t size, double angle,
                const std::string& out_prefix) {
    nab::require(size >= 2, "phantom size must be at least 2");
    nab::PhantomSpec spec;
    try {
        spec = nab::phantom_preset(preset, angle);
    } catch (const std::invalid_argument&) {
        std::cerr << "unknown preset '" << preset << "'; available:";
        for (const auto& name : nab::phantom_preset_names()) std::cerr << " " << name;
        std::cerr << "\n";
        return kExitUsage;
    }
    const auto grid = nab::make_grid<double>(size, size);
    const nab::Image<double> image = nab::render_phantom(spec, grid);
    nab::save_image(image, out_prefix + ".f64r");
    nab::export_png(image, out_prefix + ".png");

    json echo;
    echo["command"] = "phantom";
    echo["preset"] = preset;
    echo["size"] = size;
    echo["angle"] = angle;
    echo["outputs"] = {out_prefix + ".f64r", out_prefix + ".png"};
    std::cout << echo.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// project

int cmd_project(const std::string& image_path, std::size_t views, std::size_t detectors,
                double spacing, const std::string& out_prefix) {
    if (!fs::exists(image_path)) {
        std::cerr << "input image not found: " << image_path << "\n";
        return kExitUsage;
    }
    nab::require(views >= 1, "--views must be at least 1");
    const nab::Image<double> image = nab::load_image<double>(image_path);
    nab::ScanGeometry geom = nab::default_geometry(image.height, image.width, views);
    if (detectors > 0) geom.detectors = detectors;
    if (spacing > 0.0) geom.spacing = spacing;

    const nab::Sinogram<double> sino = nab::forward_project(image, geom);
    nab::save_sinogram(sino, out_prefix + ".sino");
    save_geometry(geom, out_prefix + ".geom.json");

    json echo;
    echo["command"] = "project";
    echo["image"] = image_path;
    echo["views"] = views;
    echo["detectors"] = geom.detectors;
    echo["spacing"] = geom.spacing;
    echo["outputs"] = {out_prefix + ".sino", out_prefix + ".geom.json"};
    std::cout << echo.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// reconstruct

nab::TrainConfig train_config_from(const RunConfig& cfg) {
    nab::TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.lr = cfg.lr;
    tc.freeze = freeze_mask_from_names(cfg.freeze);
    tc.seed = cfg.seed;
    tc.checkpoint_epochs = cfg.checkpoint_epochs;
    tc.grid_height = cfg.grid_height;
    tc.grid_width = cfg.grid_width;
    tc.bins = cfg.bins;
    tc.steepness_set = cfg.steepness_set;
    tc.hidden_sizes = cfg.hidden_sizes;
    return tc;
}

struct ReconstructInputs {
    nab::Sinogram<double> sino;
    nab::ScanGeometry geom;
    bool have_truth = false;
    nab::Image<double> truth;
};

ReconstructInputs gather_inputs(RunConfig& cfg, const fs::path& out_dir) {
    ReconstructInputs in;
    if (!cfg.sinogram.empty()) {
        if (!fs::exists(cfg.sinogram)) {
            throw std::invalid_argument("sinogram not found: " + cfg.sinogram);
        }
        in.sino = nab::load_sinogram<double>(cfg.sinogram);
        if (cfg.geometry.sidecar.empty()) cfg.geometry.views = in.sino.rows;
        in.geom = resolve_geometry(cfg.geometry, cfg.grid_height, cfg.grid_width);
    } else if (!cfg.phantom_preset.empty()) {
        const nab::PhantomSpec spec = nab::phantom_preset(cfg.phantom_preset, cfg.phantom_angle);
        const auto grid = nab::make_grid<double>(cfg.grid_height, cfg.grid_width);
        in.truth = nab::render_phantom(spec, grid);
        in.have_truth = true;
        in.geom = resolve_geometry(cfg.geometry, cfg.grid_height, cfg.grid_width);
        in.sino = nab::forward_project(in.truth, in.geom);
        nab::save_image(in.truth, (out_dir / "ground_truth.f64r").string());
        nab::save_sinogram(in.sino, (out_dir / "input.sino").string());
        save_geometry(in.geom, (out_dir / "input.geom.json").string());
    } else {
        throw std::invalid_argument("config needs either 'sinogram' or 'phantom'");
    }
    nab::require(in.sino.rows == in.geom.views() && in.sino.cols == in.geom.detectors,
                 "sinogram shape does not match geometry");
    // Echo the fully resolved geometry when it was built inline.
    if (cfg.geometry.sidecar.empty()) {
        cfg.geometry.views = in.geom.views();
        cfg.geometry.detectors = in.geom.detectors;
        cfg.geometry.spacing = in.geom.spacing;
    }
    return in;
}

template <typename T>
int run_trained_method(const RunConfig& cfg, const ReconstructInputs& in, const fs::path& out_dir,
                       const json& echo) {
    const nab::TrainConfig tc = train_config_from(cfg);
    const nab::Sinogram<T> sino = to_sinogram<T>(in.sino);

    nab::TrainResult<T> result;
    if (cfg.method == "nab") {
        result = nab::train(tc, sino, in.geom);
    } else {
        result = nab::train_rfc(tc, sino, in.geom);
    }

    nab::save_image(result.final_image, (out_dir / "final.f64r").string());
    nab::export_png(result.final_image, (out_dir / "final.png").string());
    write_loss_csv(result.loss_curve, (out_dir / "loss.csv").string());
    for (const auto& [epoch, image] : result.checkpoints) {
        nab::save_image(image, (out_dir / epoch_file_name(epoch)).string());
    }

    nab::Checkpoint ckpt;
    if (cfg.method == "nab") {
        ckpt.bins.resize(result.bins.count);
        ckpt.bins.u.assign(result.bins.u.begin(), result.bins.u.end());
        ckpt.bins.v.assign(result.bins.v.begin(), result.bins.v.end());
        ckpt.bins.h.assign(result.bins.h.begin(), result.bins.h.end());
        ckpt.bins.w.assign(result.bins.w.begin(), result.bins.w.end());
        ckpt.bins.k.assign(result.bins.k.begin(), result.bins.k.end());
        ckpt.bins.theta.assign(result.bins.theta.begin(), result.bins.theta.end());
        ckpt.bins.lambda.assign(result.bins.lambda.begin(), result.bins.lambda.end());
    } else {
        ckpt.frequencies = result.frequencies;
    }
    for (const auto& layer : result.net.layers) {
        typename nab::NetworkParameters<double>::Layer dl;
        dl.fan_in = layer.fan_in;
        dl.fan_out = layer.fan_out;
        dl.weights.assign(layer.weights.begin(), layer.weights.end());
        dl.bias.assign(layer.bias.begin(), layer.bias.end());
        ckpt.net.layers.push_back(std::move(dl));
    }
    ckpt.adam = result.adam;
    json meta = echo;
    meta["epoch"] = result.aborted ? result.abort_epoch : cfg.epochs;
    meta["loss"] = result.loss_curve.empty() ? json() : json(result.loss_curve.back());
    if (result.aborted) meta["abort_reason"] = result.abort_reason;
    ckpt.metadata = meta.dump(2);
    nab::save_checkpoint(ckpt, (out_dir / "checkpoint.nabc").string());

    if (result.aborted) {
        std::cerr << "numerical abort at epoch " << result.abort_epoch << ": "
                  << result.abort_reason << " (last finite state written)\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_reconstruct(RunConfig cfg) {
    apply_seed_env(cfg);
    if (cfg.threads > 0) nab::parallel::set_worker_cap(cfg.threads);
    nab::require(cfg.method == "nab" || cfg.method == "rfc" || cfg.method == "sirt",
                 "method must be one of nab, rfc, sirt");
    nab::require(cfg.precision == "single" || cfg.precision == "double",
                 "precision must be 'single' or 'double'");

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    const ReconstructInputs in = gather_inputs(cfg, out_dir);

    const json echo = echo_run_config(cfg);
    std::cout << echo.dump(2) << "\n";
    {
        std::ofstream out(out_dir / "config_echo.json");
        out << echo.dump(2) << "\n";
    }

    if (cfg.method == "sirt") {
        nab::require(cfg.sirt_iterations >= 1, "sirt needs at least one iteration");
        std::vector<double> residuals;
        const nab::Image<double> image =
            nab::sirt_reconstruct(in.sino, in.geom, cfg.grid_height, cfg.grid_width,
                                  cfg.sirt_iterations, &residuals);
        nab::save_image(image, (out_dir / "final.f64r").string());
        nab::export_png(image, (out_dir / "final.png").string());
        write_residual_csv(residuals, (out_dir / "residual.csv").string());
        return kExitOk;
    }
    if (cfg.precision == "double") {
        return run_trained_method<double>(cfg, in, out_dir, echo);
    }
    return run_trained_method<float>(cfg, in, out_dir, echo);
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& image_path, const std::string& reference_path,
             const std::string& out_prefix) {
    for (const std::string& p : {image_path, reference_path}) {
        if (!fs::exists(p)) {
            std::cerr << "input not found: " << p << "\n";
            return kExitUsage;
        }
    }
    const nab::Image<double> image = nab::load_image<double>(image_path);
    const nab::Image<double> reference = nab::load_image<double>(reference_path);
    if (image.height != reference.height || image.width != reference.width) {
        std::cerr << "shape mismatch: " << image.height << "x" << image.width << " vs "
                  << reference.height << "x" << reference.width << "\n";
        return kExitUsage;
    }

    const double spread = nab::data_range(reference);
    const double max_value = spread > 0.0 ? spread : 1.0;
    const double p = nab::psnr(image, reference, max_value);
    const double s = nab::ssim(image, reference);
    const bool exact = std::isinf(p);

    {
        std::ofstream out(out_prefix + ".csv");
        if (!out) throw nab::format_error("cannot open for writing: " + out_prefix + ".csv");
        out << "item,psnr_db,ssim\n";
        out.precision(17);
        out << "0,";
        if (exact) {
            out << "inf";
        } else {
            out << p;
        }
        out << "," << s << "\n";
    }
    json report;
    report["command"] = "eval";
    report["image"] = image_path;
    report["reference"] = reference_path;
    report["max_value"] = max_value;
    report["psnr_db"] = exact ? json() : json(p);
    report["psnr_exact_match"] = exact;
    report["ssim"] = s;
    {
        std::ofstream out(out_prefix + ".json");
        if (!out) throw nab::format_error("cannot open for writing: " + out_prefix + ".json");
        out << report.dump(2) << "\n";
    }
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradCheckLine {
    std::string group;
    double max_rel = 0.0;
    bool pass = false;
};

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    return std::abs(analytic - numeric) / denom;
}

// Central finite differences over every scalar in the 8x8/M=4/width-8
// problem, one report line per parameter group.
int cmd_gradcheck(std::uint64_t seed, bool perturb) {
    const char* env = std::getenv("NAB_SEED");
    if (env != nullptr) {
        RunConfig tmp;
        tmp.seed = seed;
        apply_seed_env(tmp);
        seed = tmp.seed;
    }

    json echo;
    echo["command"] = "gradcheck";
    echo["seed"] = seed;
    echo["perturb"] = perturb;
    std::cout << echo.dump(2) << "\n";

    // Projector adjoint identity on the acceptance shapes.
    {
        nab::rng::Engine engine(seed);
        nab::Image<double> x(64, 64);
        for (double& v : x.values) v = nab::rng::uniform(engine, -1.0, 1.0);
        nab::ScanGeometry geom = nab::default_geometry(64, 64, 16);
        geom.detectors = 96;
        nab::Sinogram<double> y(16, 96);
        for (double& v : y.values) v = nab::rng::uniform(engine, -1.0, 1.0);

        const nab::Sinogram<double> ax = nab::forward_project(x, geom);
        const nab::Image<double> aty = nab::back_project(y, geom, 64, 64);
        double lhs = 0.0, rhs = 0.0, ax_norm = 0.0, y_norm = 0.0;
        for (std::size_t i = 0; i < ax.values.size(); ++i) {
            lhs += ax.values[i] * y.values[i];
            ax_norm += ax.values[i] * ax.values[i];
            y_norm += y.values[i] * y.values[i];
        }
        for (std::size_t i = 0; i < aty.values.size(); ++i) rhs += x.values[i] * aty.values[i];
        const double rel = std::abs(lhs - rhs) / (std::sqrt(ax_norm) * std::sqrt(y_norm));
        const bool pass = rel < 1e-10;
        std::cout << "adjoint: rel " << rel << (pass ? " PASS" : " FAIL") << "\n";
        if (!pass) return kExitCheckFailure;
    }

    const std::size_t grid_n = 8;
    const std::size_t m = 4;
    const auto grid = nab::make_grid<double>(grid_n, grid_n);
    nab::BinParameterSet<double> bins = nab::init_bins<double>(m, {5.0, 7.0}, seed);
    nab::NetworkParameters<double> net = nab::init_network<double>({m, 8, 1}, seed + 1);
    const nab::ScanGeometry geom = nab::default_geometry(grid_n, grid_n, 4);

    // A synthetic target keeps residuals (and so the gradients) nonzero.
    nab::Sinogram<double> target(geom.views(), geom.detectors);
    {
        nab::rng::Engine engine(seed + 2);
        for (double& v : target.values) v = nab::rng::uniform(engine, 0.0, 1.0);

        // Features decay like exp(-2k d) away from the bins, so zero-valued
        // biases would leave most hidden pre-activations within the finite
        // difference step of the ReLU kink and the probe itself would flip
        // gates.  Differentiate in general position instead.
        for (double& b : net.layers.front().bias) {
            const double u = nab::rng::uniform(engine, -0.5, 0.5);
            b = u < 0.0 ? u - 0.1 : u + 0.1;
        }
    }

    const auto loss_of = [&]() {
        return nab::compute_loss_and_grads(bins, net, grid, geom, target).loss;
    };
    const nab::LossAndGrads<double> analytic =
        nab::compute_loss_and_grads(bins, net, grid, geom, target);
    const double step = 1e-6;
    const double tol = 1e-4;

    std::vector<GradCheckLine> lines;
    const auto check_array = [&](const std::string& group, double* values, const double* grads,
                                 std::size_t count) {
        GradCheckLine line;
        line.group = group;
        for (std::size_t i = 0; i < count; ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = loss_of();
            values[i] = saved - step;
            const double down = loss_of();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            double analytic_value = grads[i];
            if (perturb) analytic_value += 0.5;
            line.max_rel = std::max(line.max_rel, relative_error(analytic_value, numeric));
        }
        line.pass = line.max_rel < tol;
        lines.push_back(line);
    };

    check_array("u", bins.u.data(), analytic.bins.u.data(), m);
    check_array("v", bins.v.data(), analytic.bins.v.data(), m);
    check_array("h", bins.h.data(), analytic.bins.h.data(), m);
    check_array("w", bins.w.data(), analytic.bins.w.data(), m);
    check_array("k", bins.k.data(), analytic.bins.k.data(), m);
    check_array("theta", bins.theta.data(), analytic.bins.theta.data(), m);
    check_array("lambda", bins.lambda.data(), analytic.bins.lambda.data(), m);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        check_array("net.w" + std::to_string(l), net.layers[l].weights.data(),
                    analytic.net.layers[l].weights.data(), net.layers[l].weights.size());
        check_array("net.b" + std::to_string(l), net.layers[l].bias.data(),
                    analytic.net.layers[l].bias.data(), net.layers[l].bias.size());
    }

    bool all_pass = true;
    for (const GradCheckLine& line : lines) {
        std::cout << "group " << line.group << ": max_rel " << line.max_rel
                  << (line.pass ? " PASS" : " FAIL") << "\n";
        all_pass = all_pass && line.pass;
    }
    return all_pass ? kExitOk : kExitCheckFailure;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<std::vector<double>> parse_sweep_sets(const std::string& text) {
    std::vector<std::vector<double>> sets;
    std::stringstream outer(text);
    std::string group;
    while (std::getline(outer, group, ';')) {
        std::vector<double> set;
        std::stringstream inner(group);
        std::string item;
        while (std::getline(inner, item, ',')) {
            if (item.empty()) continue;
            set.push_back(std::stod(item));
        }
        if (!set.empty()) sets.push_back(set);
    }
    if (sets.empty()) throw std::invalid_argument("no steepness sets in '" + text + "'");
    return sets;
}

int cmd_sweep(RunConfig cfg, const std::string& sets_text) {
    apply_seed_env(cfg);
    const std::vector<std::vector<double>> sets = parse_sweep_sets(sets_text);
    nab::require(cfg.method == "nab", "sweep drives the nab method");

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    json echo = echo_run_config(cfg);
    echo["sweep_sets"] = sets;
    std::cout << echo.dump(2) << "\n";

    std::ofstream summary(out_dir / "sweep.csv");
    if (!summary) throw nab::format_error("cannot open for writing: sweep.csv");
    summary << "set,final_loss,psnr_db,ssim\n";
    summary.precision(17);

    for (std::size_t i = 0; i < sets.size(); ++i) {
        RunConfig run = cfg;
        run.steepness_set = sets[i];
        run.output_dir = (out_dir / ("set_" + std::to_string(i))).string();
        const int code = cmd_reconstruct(run);
        if (code != kExitOk) return code;

        const nab::Image<double> final_image =
            nab::load_image<double>((fs::path(run.output_dir) / "final.f64r").string());
        double final_loss = std::numeric_limits<double>::quiet_NaN();
        {
            std::ifstream loss_csv(fs::path(run.output_dir) / "loss.csv");
            std::string line, last;
            std::getline(loss_csv, line);  // header
            while (std::getline(loss_csv, line)) {
                if (!line.empty()) last = line;
            }
            if (!last.empty()) final_loss = std::stod(last.substr(last.find(',') + 1));
        }

        std::string set_label;
        for (std::size_t s = 0; s < sets[i].size(); ++s) {
            if (s > 0) set_label += " ";
            set_label += std::to_string(sets[i][s]);
        }
        summary << '"' << set_label << '"' << "," << final_loss;
        const fs::path truth_path = fs::path(run.output_dir) / "ground_truth.f64r";
        if (fs::exists(truth_path)) {
            const nab::Image<double> truth = nab::load_image<double>(truth_path.string());
            const double spread = nab::data_range(truth);
            const double p = nab::psnr(final_image, truth, spread > 0.0 ? spread : 1.0);
            const double s = nab::ssim(final_image, truth);
            summary << "," << p << "," << s << "\n";
        } else {
            summary << ",,\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive binning CT reconstruction toolkit"};
    app.require_subcommand(1);

    // phantom
    auto* phantom = app.add_subcommand("phantom", "render a ground-truth phantom");
    std::string ph_preset = "hollow-square";
    std::size_t ph_size = 64;
    double ph_angle = 0.0;
    std::string ph_out = "phantom";
    phantom->add_option("--preset", ph_preset, "preset name");
    phantom->add_option("--size", ph_size, "grid side length");
    phantom->add_option("--angle", ph_angle, "rotation angle in radians");
    phantom->add_option("--out", ph_out, "output path prefix");

    // project
    auto* project = app.add_subcommand("project", "forward-project an image");
    std::string pr_image;
    std::size_t pr_views = 16;
    std::size_t pr_detectors = 0;
    double pr_spacing = 0.0;
    std::string pr_out = "projection";
    project->add_option("--image", pr_image, "input F64R image")->required();
    project->add_option("--views", pr_views, "number of projection angles");
    project->add_option("--detectors", pr_detectors, "detector count (0 = default)");
    project->add_option("--spacing", pr_spacing, "detector spacing (0 = default)");
    project->add_option("--out", pr_out, "output path prefix");

    // reconstruct
    auto* reconstruct = app.add_subcommand("reconstruct", "train a reconstruction");
    std::string rc_config;
    std::string rc_method;
    std::string rc_sino;
    std::string rc_geom;
    std::string rc_out;
    std::string rc_freeze;
    std::string rc_precision;
    long long rc_epochs = -1;
    long long rc_iters = -1;
    long long rc_seed = -1;
    int rc_threads = -1;
    bool rc_deterministic = false;
    reconstruct->add_option("--config", rc_config, "JSON run config");
    reconstruct->add_option("--method", rc_method, "nab | rfc | sirt");
    reconstruct->add_option("--sino", rc_sino, "input SINO file");
    reconstruct->add_option("--geom", rc_geom, "geometry sidecar");
    reconstruct->add_option("--out", rc_out, "output directory");
    reconstruct->add_option("--epochs", rc_epochs, "training epochs");
    reconstruct->add_option("--iters", rc_iters, "SIRT iterations");
    reconstruct->add_option("--freeze", rc_freeze, "comma-separated groups to freeze");
    reconstruct->add_option("--seed", rc_seed, "RNG seed");
    reconstruct->add_option("--threads", rc_threads, "worker cap (0 = default)");
    reconstruct->add_option("--precision", rc_precision, "single | double");
    reconstruct->add_flag("--deterministic", rc_deterministic, "fixed reduction order");

    // eval
    auto* eval = app.add_subcommand("eval", "compare a reconstruction to ground truth");
    std::string ev_image, ev_reference, ev_out = "metrics";
    eval->add_option("--image", ev_image, "reconstructed F64R image")->required();
    eval->add_option("--reference", ev_reference, "ground-truth F64R image")->required();
    eval->add_option("--out", ev_out, "report path prefix");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference and adjoint checks");
    std::uint64_t gc_seed = 7;
    bool gc_perturb = false;
    gradcheck->add_option("--seed", gc_seed, "RNG seed");
    gradcheck->add_flag("--perturb", gc_perturb, "deliberately corrupt one gradient (self-test)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "steepness-set sweep");
    std::string sw_config;
    std::string sw_sets = "10;25,50,75;100,300";
    sweep->add_option("--config", sw_config, "JSON run config");
    sweep->add_option("--sets", sw_sets, "semicolon-separated steepness sets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (phantom->parsed()) {
            return cmd_phantom(ph_preset, ph_size, ph_angle, ph_out);
        }
        if (project->parsed()) {
            return cmd_project(pr_image, pr_views, pr_detectors, pr_spacing, pr_out);
        }
        if (reconstruct->parsed() || sweep->parsed()) {
            const std::string& config_path = reconstruct->parsed() ? rc_config : sw_config;
            RunConfig cfg;
            if (!config_path.empty()) cfg = load_run_config(config_path);
            if (reconstruct->parsed()) {
                if (!rc_method.empty()) cfg.method = rc_method;
                if (!rc_sino.empty()) cfg.sinogram = rc_sino;
                if (!rc_geom.empty()) cfg.geometry.sidecar = rc_geom;
                if (!rc_out.empty()) cfg.output_dir = rc_out;
                if (rc_epochs >= 0) cfg.epochs = static_cast<std::size_t>(rc_epochs);
                if (rc_iters >= 0) cfg.sirt_iterations = static_cast<std::size_t>(rc_iters);
                if (rc_seed >= 0) cfg.seed = static_cast<std::uint64_t>(rc_seed);
                if (rc_threads >= 0) cfg.threads = rc_threads;
                if (!rc_precision.empty()) cfg.precision = rc_precision;
                if (rc_deterministic) cfg.deterministic = true;
                if (!rc_freeze.empty()) {
                    cfg.freeze.clear();
                    std::stringstream names(rc_freeze);
                    std::string name;
                    while (std::getline(names, name, ',')) {
                        if (!name.empty()) cfg.freeze.push_back(name);
                    }
                }
                return cmd_reconstruct(cfg);
            }
            return cmd_sweep(cfg, sw_sets);
        }
        if (eval->parsed()) {
            return cmd_eval(ev_image, ev_reference, ev_out);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(gc_seed, gc_perturb);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nab::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
