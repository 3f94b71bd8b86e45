#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parallel.hpp"
#include "qbheat/error.hpp"
#include "qbheat/extractor.hpp"
#include "qbheat/field.hpp"
#include "qbheat/field_io.hpp"
#include "qbheat/fitting.hpp"
#include "qbheat/format.hpp"
#include "qbheat/heat.hpp"
#include "qbheat/masking.hpp"
#include "qbheat/predictor.hpp"
#include "qbheat/rng.hpp"
#include "qbheat/serialization.hpp"
#include "qbheat/spectrum.hpp"

namespace qbheat::cli {

namespace fs = std::filesystem;

namespace {

// Bad flag values found after CLI11 parsing; exit code 1 like parse errors.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kZ0SeedMix = 0x9e3779b97f4a7c15ULL;

// ---- files ---------------------------------------------------------------

Json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw DataError(path.string() + ": write failed");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void require_exists(const fs::path& path) {
    if (!fs::exists(path)) throw DataError(path.string() + ": no such file or directory");
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw DataError(dir.string() + ": cannot create output directory");
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) ensure_directory(file.parent_path());
    if (fs::is_directory(file)) throw DataError(file.string() + ": is a directory");
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// A file as-is, or the files of a directory with one of `exts`, sorted by name.
std::vector<fs::path> gather(const fs::path& input, const std::set<std::string>& exts) {
    require_exists(input);
    if (!fs::is_directory(input)) return {input};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.is_regular_file() && exts.count(lower(entry.path().extension().string()))) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

// Rethrows library errors with the input that caused them.
template <typename Fn>
auto with_context(const fs::path& path, Fn fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const NumericalError& e) {
        throw NumericalError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        const std::string what = e.what();
        if (what.rfind(path.string(), 0) == 0) throw;
        throw DataError(path.string() + ": " + what);
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<FeatureField> read_fields(const std::vector<fs::path>& files) {
    std::vector<std::optional<FeatureField>> slots(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
        slots[i] = with_context(files[i], [&] { return read_field(files[i]); });
    });
    std::vector<FeatureField> fields;
    fields.reserve(files.size());
    for (auto& s : slots) fields.push_back(std::move(*s));
    return fields;
}

FieldPrecision parse_precision(const std::string& tag) {
    return tag == "f32" ? FieldPrecision::f32 : FieldPrecision::f64;
}

Position position_or_usage(const std::string& tag) {
    const auto p = parse_position(tag);
    if (!p) throw UsageError("--position: unknown position \"" + tag + "\" (expected tl, tr, bl, br or center)");
    return *p;
}

std::vector<Position> parse_positions(const std::string& list) {
    std::vector<Position> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const Position p = position_or_usage(item);
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    if (out.empty()) throw UsageError("--position: empty list");
    return out;
}

std::string numbered(const std::string& prefix, std::size_t i, int width, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, i);
    return prefix + buf + ext;
}

Json number_or_null(std::optional<double> v) {
    return v && std::isfinite(*v) ? Json(*v) : Json(nullptr);
}

std::string csv_cell(std::optional<double> v) { return v && std::isfinite(*v) ? format_double(*v) : std::string{}; }

std::optional<double> try_energy_ratio(const Matrix& a, const Matrix& b) {
    try {
        return energy_ratio(a, b);
    } catch (const DegenerateDataError&) {
        return std::nullopt;
    }
}

// ---- model files ---------------------------------------------------------

struct ScaleModels {
    std::string tag;
    LinearModelSet models;
};

// Accepts a `fit` output ({scales: [...]}), a single fit report ({models}),
// or a bare model set.
std::vector<ScaleModels> load_models(const fs::path& path) {
    return with_context(path, [&] {
        const Json j = read_json(path);
        std::vector<ScaleModels> out;
        auto add = [&](const Json& report) {
            LinearModelSet m = models_from_json(report.at("models"));
            std::string tag = report.value("scale_tag", m.scale_tag);
            out.push_back({tag.empty() ? "model" : tag, std::move(m)});
        };
        if (j.contains("scales")) {
            for (const auto& s : j.at("scales")) add(s);
        } else if (j.contains("models")) {
            add(j);
        } else {
            LinearModelSet m = models_from_json(j);
            out.push_back({m.scale_tag.empty() ? "model" : m.scale_tag, std::move(m)});
        }
        if (out.empty()) throw DataError("no model sets");
        return out;
    });
}

const ScaleModels* find_scale(const std::vector<ScaleModels>& all, const std::string& tag) {
    for (const auto& s : all)
        if (s.tag == tag) return &s;
    return nullptr;
}

// ---- gen -----------------------------------------------------------------

struct GenArgs {
    std::string input;
    std::string output;
    std::string mode;
    std::uint64_t seed = 0;
    std::size_t count = 1;
    std::string precision = "f64";
    CLI::Option* seed_opt = nullptr;
    CLI::Option* count_opt = nullptr;
};

std::size_t required_size(const Json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("missing key \"") + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw DataError(std::string("\"") + key + "\" must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

int run_gen(const GenArgs& args, std::ostream& out, std::ostream& err) {
    const fs::path input(args.input), output(args.output);
    require_exists(input);

    const Json spec = read_json(input);
    std::size_t c = 0, h = 0, w = 0;
    double spacing = 0.0;
    std::string mode_tag;
    std::uint64_t seed = 0;
    std::size_t count = 1;
    CommutingPair pair;
    std::optional<std::vector<double>> fixed_z0;
    with_context(input, [&] {
        c = required_size(spec, "C");
        h = required_size(spec, "H");
        w = required_size(spec, "W");
        if (!spec.contains("spacing")) throw DataError("missing key \"spacing\"");
        spacing = spec.at("spacing").get<double>();
        mode_tag = spec.value("mode", std::string("continuous"));
        seed = spec.value("seed", std::uint64_t{0});
        count = spec.value("count", std::size_t{1});
        if (!args.mode.empty()) mode_tag = args.mode;
        if (args.seed_opt->count() > 0) seed = args.seed;
        if (args.count_opt->count() > 0) count = args.count;
        if (mode_tag != "continuous" && mode_tag != "discrete") throw DataError("unknown mode \"" + mode_tag + "\"");
        if (count == 0) throw DataError("count must be positive");
        if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DataError("spacing must be positive");

        if (spec.contains("random-commuting")) {
            const auto& rc = spec.at("random-commuting");
            if (!rc.contains("rho_max")) throw DataError("random-commuting: missing key \"rho_max\"");
            pair = random_commuting_pair(c, rc.at("rho_max").get<double>(), seed);
        } else {
            if (!spec.contains("A") || !spec.contains("B")) {
                throw DataError("need \"A\" and \"B\" or \"random-commuting\"");
            }
            pair = {matrix_from_json(spec.at("A"), "A"), matrix_from_json(spec.at("B"), "B")};
            if (pair.a.rows() != c || pair.a.cols() != c) throw ShapeError("A must be C x C");
        }
        if (spec.contains("z0")) fixed_z0 = spec.at("z0").get<std::vector<double>>();
        FieldGenSpec probe{pair.a, pair.b, fixed_z0.value_or(std::vector<double>(c, 1.0)), GenerationMode::continuous, {}};
        validate(probe);
        return 0;
    });
    const GenerationMode mode = mode_tag == "discrete" ? GenerationMode::discrete : GenerationMode::continuous;
    const FieldPrecision precision = parse_precision(args.precision);
    ensure_directory(output);

    std::vector<std::vector<double>> z0s(count);
    SplitMix64 rng(seed ^ kZ0SeedMix);
    for (auto& z : z0s) {
        if (fixed_z0) {
            z = *fixed_z0;
        } else {
            z.resize(c);
            for (double& e : z) e = rng.normal();
        }
    }

    const auto warnings = generation_warnings(FieldGenSpec{pair.a, pair.b, z0s.front(), mode, {}}, spacing);
    for (const auto& msg : warnings) err << "warning: " << msg << "\n";

    const int digits = count > 1000 ? static_cast<int>(std::to_string(count - 1).size()) : 3;
    std::vector<std::string> names(count);
    parallel_for(count, [&](std::size_t i) {
        FieldGenSpec s{pair.a, pair.b, z0s[i], mode, {}};
        names[i] = numbered("field_", i, digits, ".qbhf");
        write_field(output / names[i], generate_exact_field(s, h, w, spacing), precision);
    });

    Json offsets = Json::object();
    for (Position p : {Position::center, Position::corner_tl}) {
        try {
            const QuarterLayout layout = make_layout(h, w, p);
            offsets[scale_tag_for(layout)] = Json{
                {"dx_cells", layout.dx_cells},
                {"dy_cells", layout.dy_cells},
                {"A", to_json(effective_step_matrix(pair.a, mode, spacing, layout.dx_cells))},
                {"B", to_json(effective_step_matrix(pair.b, mode, spacing, layout.dy_cells))}};
        } catch (const LayoutError&) {
        }
    }
    Json truth{{"C", c},
               {"H", h},
               {"W", w},
               {"spacing", spacing},
               {"mode", mode_tag},
               {"seed", seed},
               {"count", count},
               {"precision", args.precision},
               {"A", to_json(pair.a)},
               {"B", to_json(pair.b)},
               {"fields", names},
               {"z0", z0s},
               {"warnings", warnings},
               {"offset_models", std::move(offsets)}};
    write_text(output / "truth.json", dump(truth));
    out << "wrote " << count << " field(s) to " << output.string() << "\n";
    return 0;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
    std::string input;
    std::string output;
    std::string positions = "tl,center";
    bool closed_form = false;
    bool iterative = false;
    FitConfig config;
    int variant = 2;
};

Json cell_models_json(const FitReport& report) {
    const auto& ls = report.layouts;
    if (ls.empty()) return nullptr;
    for (const auto& l : ls) {
        if (l.dx_cells != ls.front().dx_cells || l.dy_cells != ls.front().dy_cells) return nullptr;
    }
    try {
        const CellModels cm = cell_models(report.models, ls.front().dx_cells, ls.front().dy_cells);
        return Json{{"A", to_json(cm.a)}, {"B", to_json(cm.b)}, {"spacing", cm.spacing}};
    } catch (const Error&) {
        return nullptr;
    }
}

int run_fit(const FitArgs& args, std::ostream& out, std::ostream&) {
    const fs::path input(args.input), output(args.output);
    const auto positions = parse_positions(args.positions);
    validate(args.config);
    const auto files = gather(input, {".qbhf"});
    if (files.empty()) throw DataError(input.string() + ": no input fields (*.qbhf)");
    ensure_parent(output);

    const auto fields = read_fields(files);
    std::vector<FeatureField> batch;
    std::vector<QuarterLayout> layouts;
    for (Position p : positions) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            layouts.push_back(with_context(files[i], [&] {
                return make_layout(fields[i].height(), fields[i].width(), p);
            }));
            batch.push_back(fields[i]);
        }
    }

    FitMethod method = FitMethod::closed_form;
    if (args.iterative) method = args.closed_form ? FitMethod::closed_form_then_iterative : FitMethod::iterative;
    const auto reports = with_context(input, [&] {
        return fit_multiscale(batch, layouts, args.config, method, args.variant);
    });

    Json names = Json::array();
    for (const auto& f : files) names.push_back(f.filename().string());
    Json pos = Json::array();
    for (Position p : positions) pos.push_back(std::string(to_string(p)));
    Json scales = Json::array();
    for (const auto& r : reports) {
        Json j = to_json(r);
        j["energy_ratio"] = number_or_null(try_energy_ratio(r.models.a, r.models.b));
        j["cell_models"] = cell_models_json(r);
        scales.push_back(std::move(j));
    }
    write_text(output, dump(Json{{"fields", names}, {"positions", pos}, {"scales", scales}}));
    out << "wrote " << reports.size() << " scale(s) to " << output.string() << "\n";
    return 0;
}

// ---- predict -------------------------------------------------------------

struct PredictArgs {
    std::string input;
    std::string models;
    std::string position = "tl";
    std::string output;
    std::string report;
    bool exact_inverse = false;
    std::string precision = "f64";
};

int run_predict(const PredictArgs& args, std::ostream& out, std::ostream&) {
    const fs::path input(args.input), models_path(args.models), output(args.output);
    const Position position = position_or_usage(args.position);
    require_exists(input);
    require_exists(models_path);
    ensure_parent(output);
    if (!args.report.empty()) ensure_parent(args.report);

    const auto all = load_models(models_path);
    const FeatureField field = with_context(input, [&] { return read_field(input); });
    const QuarterLayout layout = with_context(input, [&] {
        return make_layout(field.height(), field.width(), position);
    });
    const std::string tag = scale_tag_for(layout);
    const ScaleModels* chosen = find_scale(all, tag);
    if (!chosen) {
        if (all.size() != 1) throw DataError(models_path.string() + ": no \"" + tag + "\" model set");
        chosen = &all.front();
    }
    LinearModelSet models = chosen->models;
    if (args.exact_inverse) models.exact_inverse = true;

    const Prediction pred = with_context(input, [&] { return predict_masked(field, layout, models); });
    write_field(output, pred.field, parse_precision(args.precision));
    Json report = to_json(pred.report);
    report["position"] = std::string(to_string(position));
    report["scale_tag"] = chosen->tag;
    if (args.report.empty()) {
        out << dump(report);
    } else {
        write_text(args.report, dump(report));
    }
    return 0;
}

// ---- spectrum ------------------------------------------------------------

struct SpectrumArgs {
    std::string models;
    std::string output;
    std::string format = "csv";
};

Json spectrum_json(const SpectrumReport& r) {
    Json eig = Json::array();
    for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) {
        eig.push_back(Json{{"re", r.eigenvalues[k].real()},
                           {"im", r.eigenvalues[k].imag()},
                           {"magnitude", r.magnitudes[k]},
                           {"normalized_magnitude", r.normalized[k]}});
    }
    return Json{{"matrix", r.matrix_tag}, {"energy", r.energy}, {"eigenvalues", std::move(eig)}};
}

int run_spectrum(const SpectrumArgs& args, std::ostream& out, std::ostream&) {
    const fs::path models_path(args.models), output(args.output);
    require_exists(models_path);
    const auto all = load_models(models_path);
    ensure_directory(output);

    struct Spectra {
        SpectrumReport a;
        SpectrumReport b;
    };
    std::vector<Spectra> spectra;
    Json scales = Json::array();
    for (const auto& s : all) {
        Spectra sp{normalized_spectrum(s.models.a, "A"), normalized_spectrum(s.models.b, "B")};
        for (const SpectrumReport* r : {&sp.a, &sp.b}) {
            const fs::path file = output / ("spectrum_" + s.tag + "_" + r->matrix_tag + "." + args.format);
            if (args.format == "csv") {
                std::ostringstream os;
                write_spectrum_csv(os, *r);
                write_text(file, os.str());
            } else {
                write_text(file, dump(spectrum_json(*r)));
            }
        }
        const auto ratio = try_energy_ratio(s.models.a, s.models.b);
        scales.push_back(Json{{"scale_tag", s.tag},
                              {"energy_a", sp.a.energy},
                              {"energy_b", sp.b.energy},
                              {"energy_ratio", number_or_null(ratio)},
                              {"alignment_a_b", alignment(sp.a, sp.b)}});
        spectra.push_back(std::move(sp));
    }

    Json cross = nullptr;
    const ScaleModels* q = find_scale(all, "quarter");
    const ScaleModels* hf = find_scale(all, "half");
    if (q && hf) {
        const auto rq = try_energy_ratio(q->models.a, q->models.b);
        const auto rh = try_energy_ratio(hf->models.a, hf->models.b);
        std::optional<double> gap;
        if (rq && rh) gap = std::abs(*rq - *rh) / std::abs(*rh);
        cross = Json{{"relative_gap", number_or_null(gap)},
                     {"alignment_a", alignment(q->models.a, hf->models.a)},
                     {"alignment_b", alignment(q->models.b, hf->models.b)}};
    }
    write_text(output / "summary.json", dump(Json{{"scales", scales}, {"cross_scale", cross}}));
    out << "wrote spectra for " << all.size() << " scale(s) to " << output.string() << "\n";
    return 0;
}

// ---- corr ----------------------------------------------------------------

struct CorrArgs {
    std::string input;
    std::string output;
    std::string format = "json";
};

int run_corr(const CorrArgs& args, std::ostream& out, std::ostream&) {
    const fs::path input(args.input);
    const auto files = gather(input, {".qbhf"});
    if (files.empty()) throw DataError(input.string() + ": no input fields (*.qbhf)");
    if (!args.output.empty()) ensure_parent(args.output);

    std::vector<std::optional<double>> scores(files.size());
    std::vector<CorrelationReport> reports(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
        with_context(files[i], [&] {
            const FeatureField f = read_field(files[i]);
            try {
                reports[i] = spatial_correlation(f);
                scores[i] = reports[i].score;
            } catch (const DegenerateDataError&) {
                reports[i].n_positions = f.height() * f.width();
                reports[i].excluded_positions = degenerate_positions(f);
            }
            return 0;
        });
    });

    std::string text;
    if (args.format == "csv") {
        text = "field,score,excluded_positions,n_positions\n";
        for (std::size_t i = 0; i < files.size(); ++i) {
            text += files[i].filename().string() + "," + csv_cell(scores[i]) + "," +
                    std::to_string(reports[i].excluded_positions) + "," + std::to_string(reports[i].n_positions) + "\n";
        }
    } else {
        Json rows = Json::array();
        for (std::size_t i = 0; i < files.size(); ++i) {
            rows.push_back(Json{{"field", files[i].filename().string()},
                                {"score", number_or_null(scores[i])},
                                {"excluded_positions", reports[i].excluded_positions},
                                {"n_positions", reports[i].n_positions}});
        }
        text = dump(Json{{"fields", rows}});
    }
    if (args.output.empty()) {
        out << text;
    } else {
        write_text(args.output, text);
    }
    return 0;
}

// ---- heat-sim ------------------------------------------------------------

struct HeatArgs {
    std::string output;
    std::size_t height = 32;
    std::size_t width = 32;
    double dx = 1.0;
    double dt = 0.0;  // 0 picks dx²/4
    int steps = 100;
    int every = 10;
    std::string init = "hotspot";
    std::uint64_t seed = 0;
    std::string precision = "f64";
};

int run_heat(const HeatArgs& args, std::ostream& out, std::ostream&) {
    const fs::path output(args.output);
    if (args.height == 0 || args.width == 0) throw DataError("heat-sim: grid must be non-empty");
    if (!(args.dx > 0.0)) throw DataError("heat-sim: --dx must be positive");
    if (args.steps < 0 || args.every < 1) throw DataError("heat-sim: need --steps >= 0 and --every >= 1");
    const double dt = args.dt > 0.0 ? args.dt : max_stable_dt(args.dx);
    if (dt > max_stable_dt(args.dx) * (1.0 + 1e-12)) {
        throw DataError("heat-sim: --dt " + format_double(dt) + " exceeds the stability bound dx^2/4 = " +
                        format_double(max_stable_dt(args.dx)));
    }
    ensure_directory(output);

    std::vector<double> u0(args.height * args.width, 0.0);
    if (args.init == "hotspot") {
        u0[(args.height / 2) * args.width + args.width / 2] = 1.0;
    } else if (args.init == "checkerboard") {
        for (std::size_t i = 0; i < args.height; ++i)
            for (std::size_t j = 0; j < args.width; ++j) u0[i * args.width + j] = static_cast<double>((i + j) % 2);
    } else {
        SplitMix64 rng(args.seed);
        for (double& v : u0) v = rng.uniform();
    }

    const FieldPrecision precision = parse_precision(args.precision);
    ScalarHeatField u(args.height, args.width, args.dx, std::move(u0));
    Json frames = Json::array();
    auto emit = [&](int step) {
        const std::string name = numbered("frame_", static_cast<std::size_t>(step), 5, ".qbhf");
        write_field(output / name, u.to_feature_field(), precision);
        frames.push_back(Json{{"step", step}, {"file", name}, {"total", u.total()}, {"max_abs", u.max_abs()}});
    };
    emit(0);
    for (int s = 1; s <= args.steps; ++s) {
        u = heat_step(u, dt);
        if (s % args.every == 0 || s == args.steps) emit(s);
    }
    write_text(output / "heat.json", dump(Json{{"height", args.height},
                                               {"width", args.width},
                                               {"dx", args.dx},
                                               {"dt", dt},
                                               {"steps", args.steps},
                                               {"every", args.every},
                                               {"init", args.init},
                                               {"seed", args.seed},
                                               {"frames", frames}}));
    out << "wrote " << frames.size() << " frame(s) to " << output.string() << "\n";
    return 0;
}

// ---- extract -------------------------------------------------------------

struct ExtractArgs {
    std::string input;
    std::string output;
    ExtractorConfig config;
    std::string precision = "f64";
};

int run_extract(const ExtractArgs& args, std::ostream& out, std::ostream&) {
    const fs::path input(args.input), output(args.output);
    const auto files = gather(input, {".pgm", ".ppm", ".pnm"});
    if (files.empty()) throw DataError(input.string() + ": no input images (*.pgm, *.ppm, *.pnm)");
    if (args.config.out_channels == 0 || args.config.kernel == 0 || args.config.stride == 0) {
        throw DataError("extract: --channels, --kernel and --stride must be positive");
    }
    ensure_directory(output);

    const FieldPrecision precision = parse_precision(args.precision);
    parallel_for(files.size(), [&](std::size_t i) {
        with_context(files[i], [&] {
            const FeatureField f = extract_features(read_image(files[i]), args.config);
            write_field(output / (files[i].stem().string() + ".qbhf"), f, precision);
            return 0;
        });
    });
    out << "wrote " << files.size() << " field(s) to " << output.string() << "\n";
    return 0;
}

// ---- report --------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string output;
    std::string format = "csv";
};

struct ReportRow {
    std::string name;
    std::optional<double> ratio_quarter;
    std::optional<double> ratio_half;
    std::optional<double> gap;
    std::optional<double> alignment_a;
    std::optional<double> alignment_b;
};

int run_report(const ReportArgs& args, std::ostream& out, std::ostream&) {
    std::vector<fs::path> files;
    for (const auto& in : args.inputs) {
        const auto found = gather(in, {".json"});
        files.insert(files.end(), found.begin(), found.end());
    }
    if (files.empty()) throw DataError("report: no fit reports (*.json) in the inputs");
    if (!args.output.empty()) ensure_parent(args.output);

    std::vector<ReportRow> rows(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
        const auto all = load_models(files[i]);
        ReportRow& row = rows[i];
        row.name = files[i].stem().string();
        const ScaleModels* q = find_scale(all, "quarter");
        const ScaleModels* h = find_scale(all, "half");
        with_context(files[i], [&] {
            if (q) row.ratio_quarter = try_energy_ratio(q->models.a, q->models.b);
            if (h) row.ratio_half = try_energy_ratio(h->models.a, h->models.b);
            if (row.ratio_quarter && row.ratio_half) {
                row.gap = std::abs(*row.ratio_quarter - *row.ratio_half) / std::abs(*row.ratio_half);
            }
            if (q && h) {
                row.alignment_a = alignment(q->models.a, h->models.a);
                row.alignment_b = alignment(q->models.b, h->models.b);
            }
            return 0;
        });
    });

    std::string text;
    if (args.format == "csv") {
        text = "report,energy_ratio_quarter,energy_ratio_half,relative_gap,alignment_a,alignment_b\n";
        for (const auto& r : rows) {
            text += r.name + "," + csv_cell(r.ratio_quarter) + "," + csv_cell(r.ratio_half) + "," + csv_cell(r.gap) +
                    "," + csv_cell(r.alignment_a) + "," + csv_cell(r.alignment_b) + "\n";
        }
    } else {
        Json list = Json::array();
        for (const auto& r : rows) {
            list.push_back(Json{{"report", r.name},
                                {"energy_ratio_quarter", number_or_null(r.ratio_quarter)},
                                {"energy_ratio_half", number_or_null(r.ratio_half)},
                                {"relative_gap", number_or_null(r.gap)},
                                {"alignment_a", number_or_null(r.alignment_a)},
                                {"alignment_b", number_or_null(r.alignment_b)}});
        }
        text = dump(Json{{"reports", list}});
    }
    if (args.output.empty()) {
        out << text;
    } else {
        write_text(args.output, text);
    }
    return 0;
}

// ---- wiring --------------------------------------------------------------

const auto kPrecision = CLI::IsMember({"f32", "f64"});
const auto kFormat = CLI::IsMember({"csv", "json"});

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"QB-Heat: linear cross-block models over multi-channel feature fields", "qbheat"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Synthesize exact fields from a JSON generator spec");
    gen_cmd->add_option("--input", gen.input, "Spec file (JSON)")->required();
    gen_cmd->add_option("--output", gen.output, "Output directory")->required();
    gen_cmd->add_option("--mode", gen.mode, "Override the mode in the spec file")->check(CLI::IsMember({"continuous", "discrete"}));
    gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "Override the seed in the spec file");
    gen.count_opt = gen_cmd->add_option("--count", gen.count, "Number of fields (distinct z0 each)");
    gen_cmd->add_option("--precision", gen.precision, "QBHF scalar type")->check(kPrecision)->capture_default_str();

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit linear models per scale from a directory of fields");
    fit_cmd->add_option("--input", fit.input, "Field directory or single .qbhf file")->required();
    fit_cmd->add_option("--output", fit.output, "Fit JSON")->required();
    fit_cmd->add_option("--position", fit.positions, "Comma list of tl,tr,bl,br,center")->capture_default_str();
    fit_cmd->add_flag("--closed-form", fit.closed_form, "Least-squares fit (default)");
    fit_cmd->add_flag("--iterative", fit.iterative, "Gradient descent (after closed form when both are given)");
    fit_cmd->add_option("--ridge", fit.config.ridge, "Ridge penalty")->capture_default_str();
    fit_cmd->add_option("--steps", fit.config.max_steps, "Gradient steps")->capture_default_str();
    fit_cmd->add_option("--lr", fit.config.step_size, "Gradient step size")->capture_default_str();
    fit_cmd->add_option("--variant", fit.variant, "Explicit model count")->check(CLI::IsMember({2, 4, 8}))
        ->capture_default_str();
    fit_cmd->add_option("--trace-every", fit.config.trace_every, "Trace interval, 0 disables")->capture_default_str();
    fit_cmd->add_flag("--standardize", fit.config.standardize, "Scale the batch to unit standard deviation");

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "Fill masked blocks of a field and score them");
    pred_cmd->add_option("--input", pred.input, "Field (.qbhf)")->required();
    pred_cmd->add_option("--models", pred.models, "Fit JSON or model-set JSON")->required();
    pred_cmd->add_option("--output", pred.output, "Predicted field (.qbhf)")->required();
    pred_cmd->add_option("--position", pred.position, "tl, tr, bl, br or center")->capture_default_str();
    pred_cmd->add_option("--report", pred.report, "MSE report JSON (stdout if absent)");
    pred_cmd->add_flag("--exact-inverse", pred.exact_inverse, "Derive left/up models from the exact inverse");
    pred_cmd->add_option("--precision", pred.precision, "QBHF scalar type")->check(kPrecision)->capture_default_str();

    SpectrumArgs spec;
    auto* spec_cmd = app.add_subcommand("spectrum", "Eigen-spectra, energy ratios and alignment of fitted models");
    spec_cmd->add_option("--models", spec.models, "Fit JSON or model-set JSON")->required();
    spec_cmd->add_option("--output", spec.output, "Output directory")->required();
    spec_cmd->add_option("--format", spec.format, "Spectrum file format")->check(kFormat)->capture_default_str();

    CorrArgs corr;
    auto* corr_cmd = app.add_subcommand("corr", "Spatial correlation score per field");
    corr_cmd->add_option("--input", corr.input, "Field or directory of fields")->required();
    corr_cmd->add_option("--output", corr.output, "Output file (stdout if absent)");
    corr_cmd->add_option("--format", corr.format, "csv or json")->check(kFormat)->capture_default_str();

    HeatArgs heat;
    auto* heat_cmd = app.add_subcommand("heat-sim", "Scalar heat evolution written as QBHF frames");
    heat_cmd->add_option("--output", heat.output, "Output directory")->required();
    heat_cmd->add_option("--height", heat.height, "Rows")->capture_default_str();
    heat_cmd->add_option("--width", heat.width, "Columns")->capture_default_str();
    heat_cmd->add_option("--dx", heat.dx, "Grid step")->capture_default_str();
    heat_cmd->add_option("--dt", heat.dt, "Time step (default dx^2/4)");
    heat_cmd->add_option("--steps", heat.steps, "Euler steps")->capture_default_str();
    heat_cmd->add_option("--every", heat.every, "Frame interval")->capture_default_str();
    heat_cmd->add_option("--init", heat.init, "Initial condition")
        ->check(CLI::IsMember({"hotspot", "checkerboard", "random"}))
        ->capture_default_str();
    heat_cmd->add_option("--seed", heat.seed, "Seed for --init random")->capture_default_str();
    heat_cmd->add_option("--precision", heat.precision, "QBHF scalar type")->check(kPrecision)->capture_default_str();

    ExtractArgs ext;
    auto* ext_cmd = app.add_subcommand("extract", "Images (P5/P6) to feature fields");
    ext_cmd->add_option("--input", ext.input, "Image or directory of images")->required();
    ext_cmd->add_option("--output", ext.output, "Output directory")->required();
    ext_cmd->add_option("--seed", ext.config.seed, "Weight seed")->capture_default_str();
    ext_cmd->add_option("--channels", ext.config.out_channels, "Output channels")->capture_default_str();
    ext_cmd->add_option("--kernel", ext.config.kernel, "Kernel size")->capture_default_str();
    ext_cmd->add_option("--stride", ext.config.stride, "Stride")->capture_default_str();
    ext_cmd->add_option("--precision", ext.precision, "QBHF scalar type")->check(kPrecision)->capture_default_str();

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "Energy ratios per scale across fit outputs");
    rep_cmd->add_option("--input", rep.inputs, "Fit JSON files or directories")->required();
    rep_cmd->add_option("--output", rep.output, "Output file (stdout if absent)");
    rep_cmd->add_option("--format", rep.format, "csv or json")->check(kFormat)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen_cmd) return run_gen(gen, out, err);
        if (*fit_cmd) return run_fit(fit, out, err);
        if (*pred_cmd) return run_predict(pred, out, err);
        if (*spec_cmd) return run_spectrum(spec, out, err);
        if (*corr_cmd) return run_corr(corr, out, err);
        if (*heat_cmd) return run_heat(heat, out, err);
        if (*ext_cmd) return run_extract(ext, out, err);
        if (*rep_cmd) return run_report(rep, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("qbheat");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qbheat::cli
