#include "genhints/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "genhints/metrics.hpp"

namespace fs = std::filesystem;

namespace genhints {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void run_parallel(int jobs, int n, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w)
        workers.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : workers) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

}  // namespace

Experiment load_experiment(const ConfigMap& user_config, std::optional<uint64_t> seed_override) {
    Experiment exp;
    exp.resolved = resolve_config(user_config);
    if (seed_override) exp.resolved["training.seeds"] = std::to_string(*seed_override);
    const ConfigMap& c = exp.resolved;
    exp.hash = config_hash(c);

    exp.task.image_side = static_cast<int>(config_long(c, "task.image_side"));
    exp.task.num_classes = static_cast<int>(config_long(c, "task.num_classes"));
    exp.task.validate();

    exp.n_train = static_cast<int>(config_long(c, "data.n_train"));
    exp.n_test = static_cast<int>(config_long(c, "data.n_test"));
    exp.data_seed = static_cast<uint64_t>(config_long(c, "data.seed"));
    exp.data_dir = c.at("data.dir");

    exp.mode = c.at("run.mode");
    if (exp.mode != "baseline" && exp.mode != "hints" && exp.mode != "both")
        throw ConfigError("run.mode must be baseline, hints, or both");

    TrainingConfig& t = exp.training;
    t.epochs = static_cast<int>(config_long(c, "training.epochs"));
    t.batch_size = static_cast<int>(config_long(c, "training.batch_size"));
    t.learning_rate = config_double(c, "training.learning_rate");
    t.weight_decay = config_double(c, "training.weight_decay");
    t.alpha = config_double(c, "training.alpha");
    t.train_temperature = config_double(c, "training.temperature");
    t.eval_temperature = config_double(c, "eval.temperature");
    t.loss_variant = parse_hint_loss_variant(c.at("training.loss_variant"));
    t.scheduler = parse_lr_schedule(c.at("training.scheduler"));
    t.checkpoint_count = static_cast<int>(config_long(c, "training.checkpoint_count"));
    t.hint_only = config_bool(c, "training.hint_only");
    t.eval_real_slice = static_cast<int>(config_long(c, "eval.real_slice"));
    t.eval_virtual_batch = static_cast<int>(config_long(c, "eval.virtual_batch"));
    t.aug_spec = HintTransformSpec{config_double(c, "aug.flip_probability"),
                                   config_double(c, "aug.max_translate_fraction"),
                                   config_double(c, "aug.max_rotate_degrees")};
    t.hint_spec = HintTransformSpec{config_double(c, "hint.flip_probability"),
                                    config_double(c, "hint.max_translate_fraction"),
                                    config_double(c, "hint.max_rotate_degrees")};
    t.validate();

    exp.seeds = config_seed_list(c, "training.seeds");
    exp.sampler_kind = parse_sampler_kind(c.at("sampler.kind"));
    exp.sampler_bandwidth = config_double(c, "sampler.bandwidth");
    exp.sampler_seed = static_cast<uint64_t>(config_long(c, "sampler.seed"));
    exp.sweep_alphas = config_double_list(c, "sweep.alphas");
    exp.study_bandwidths = config_double_list(c, "study.bandwidths");
    exp.study_n_samples = static_cast<int>(config_long(c, "study.n_samples"));
    exp.study_epochs = static_cast<int>(config_long(c, "study.epochs"));
    if (exp.study_epochs < 1) throw ConfigError("study.epochs must be >= 1");
    exp.study_embedder_seed = static_cast<uint64_t>(config_long(c, "study.embedder_seed"));
    return exp;
}

void write_labeled_set(const std::string& base_path, const LabeledSet& set) {
    std::ofstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot write " + base_path + ".bin");
    for (const auto& img : set.images) write_image_record(bin, img);
    std::ostringstream labels;
    labels << "index,label\n";
    for (size_t i = 0; i < set.labels.size(); ++i) labels << i << "," << set.labels[i] << "\n";
    write_text_file(base_path + "_labels.csv", labels.str());
}

LabeledSet read_labeled_set(const std::string& base_path) {
    std::ifstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot read dataset file: " + base_path + ".bin");
    LabeledSet set;
    while (bin.peek() != EOF) set.images.push_back(read_image_record(bin));
    if (set.images.empty()) throw Error("dataset file is empty: " + base_path + ".bin");
    std::ifstream labels(base_path + "_labels.csv");
    if (!labels) throw Error("cannot read labels file: " + base_path + "_labels.csv");
    std::string line;
    std::getline(labels, line);  // header
    while (std::getline(labels, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("corrupt labels file: " + base_path);
        set.labels.push_back(std::stoi(line.substr(comma + 1)));
    }
    if (set.labels.size() != set.images.size())
        throw Error("label count does not match image count: " + base_path);
    return set;
}

Datasets obtain_datasets(const Experiment& exp) {
    Datasets d;
    if (!exp.data_dir.empty()) {
        d.train = read_labeled_set(exp.data_dir + "/train");
        d.test = read_labeled_set(exp.data_dir + "/test");
        return d;
    }
    Rng train_rng(mix_seed(exp.data_seed, 1));
    Rng test_rng(mix_seed(exp.data_seed, 2));
    d.train = synth_labeled_set(exp.task, exp.n_train, train_rng);
    d.test = synth_labeled_set(exp.task, exp.n_test, test_rng);
    return d;
}

Sampler build_sampler(const Experiment& exp, const std::vector<RasterImage>& train_corpus) {
    switch (exp.sampler_kind) {
        case SamplerKind::TrueDistribution:
            return make_true_sampler(exp.task, exp.sampler_seed);
        case SamplerKind::Kde:
            return fit_kde(train_corpus, exp.sampler_bandwidth, exp.sampler_seed);
        case SamplerKind::Noise:
            return make_noise_sampler(exp.task.image_side, exp.task.image_side, exp.sampler_seed);
    }
    throw Error("unreachable");
}

void save_model(const std::string& path, const ClassifierParams& params, const ConfigMap& meta) {
    std::ostringstream out;
    for (const auto& [k, v] : meta) out << k << "=" << v << "\n";
    const char* names[] = {"conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w", "fc_b"};
    auto tensors = params.all();
    for (size_t i = 0; i < tensors.size(); ++i) {
        out << "param " << names[i];
        for (int d : tensors[i]->shape()) out << " " << d;
        out << "\n";
        char buf[64];
        const auto& data = tensors[i]->data();
        for (size_t j = 0; j < data.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data[j]);
            out << buf << (j + 1 == data.size() ? "\n" : " ");
        }
    }
    write_text_file(path, out.str());
}

ClassifierParams load_model(const std::string& path, ConfigMap* meta_out) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read model file: " + path);
    ConfigMap meta;
    std::map<std::string, Tensor> tensors;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("param ", 0) == 0) {
            std::istringstream hdr(line.substr(6));
            std::string name;
            hdr >> name;
            Shape shape;
            int d;
            while (hdr >> d) shape.push_back(d);
            int count = 1;
            for (int s : shape) count *= s;
            std::vector<double> data(count);
            if (!std::getline(in, line)) throw Error("corrupt model file: " + path);
            std::istringstream values(line);
            for (auto& v : data)
                if (!(values >> v)) throw Error("corrupt model file: " + path);
            tensors.emplace(name, Tensor::create(std::move(shape), std::move(data), true));
        } else {
            const auto eq = line.find('=');
            if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    const char* required[] = {"conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w", "fc_b"};
    for (const char* name : required)
        if (!tensors.count(name)) throw Error("model file missing parameter " + std::string(name));
    ClassifierParams p;
    p.conv1_w = tensors.at("conv1_w");
    p.conv1_b = tensors.at("conv1_b");
    p.conv2_w = tensors.at("conv2_w");
    p.conv2_b = tensors.at("conv2_b");
    p.fc_w = tensors.at("fc_w");
    p.fc_b = tensors.at("fc_b");
    p.num_classes = p.fc_b.shape()[0];
    if (meta_out) *meta_out = std::move(meta);
    return p;
}

int cmd_synth_data(const std::string& config_path, const std::string& out_dir,
                   std::optional<uint64_t> seed_override) {
    try {
        Experiment exp = load_experiment(parse_config_file(config_path), seed_override);
        if (exp.n_train < exp.task.num_classes || exp.n_test < exp.task.num_classes)
            throw ConfigError("data.n_train and data.n_test must be at least task.num_classes");
        fs::create_directories(out_dir);
        Rng train_rng(mix_seed(exp.data_seed, 1));
        Rng test_rng(mix_seed(exp.data_seed, 2));
        write_labeled_set(out_dir + "/train", synth_labeled_set(exp.task, exp.n_train, train_rng));
        write_labeled_set(out_dir + "/test", synth_labeled_set(exp.task, exp.n_test, test_rng));
        write_text_file(out_dir + "/config_resolved.txt",
                        "# config_hash=" + exp.hash + "\n" + canonical_config_text(exp.resolved));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

namespace {

struct CompletedRun {
    std::string mode;
    uint64_t seed = 0;
    double alpha = 0.0;
    RunRecord record;
    double final_test_accuracy = 0.0;
    double final_train_accuracy = 0.0;
    double final_class_loss = 0.0;
    double final_hint_loss_real = 0.0;
    double final_hint_loss_virtual = 0.0;
    ClassifierParams params;
};

CompletedRun execute_run(const Experiment& exp, const Datasets& data, const std::string& mode,
                         uint64_t seed, double alpha) {
    TrainingConfig cfg = exp.training;
    cfg.seed = seed;
    cfg.alpha = mode == "baseline" ? 0.0 : alpha;
    Sampler sampler = build_sampler(exp, data.train.images);
    TrainResult result = run_training(cfg, data.train, sampler, data.test);
    if (result.record.aborted)
        throw Error("training run aborted (" + mode + ", seed " + std::to_string(seed) +
                    "): " + result.record.abort_reason);
    CompletedRun run;
    run.mode = mode;
    run.seed = seed;
    run.alpha = cfg.alpha;
    const auto& last = result.record.rows.back();
    run.final_test_accuracy = last.test_accuracy;
    run.final_class_loss = last.class_loss;
    run.final_hint_loss_real = last.hint_loss_real;
    run.final_hint_loss_virtual = last.hint_loss_virtual;
    run.final_train_accuracy =
        accuracy(classifier_predict(result.params, data.train.images), data.train.labels);
    run.record = std::move(result.record);
    run.params = std::move(result.params);
    return run;
}

ConfigMap model_meta(const Experiment& exp) {
    return {
        {"# config_hash", exp.hash},
        {"model.image_side", std::to_string(exp.task.image_side)},
        {"model.num_classes", std::to_string(exp.task.num_classes)},
        {"loss_variant", hint_loss_variant_name(exp.training.loss_variant)},
        {"hint.flip_probability", fmt(exp.training.hint_spec.flip_probability)},
        {"hint.max_translate_fraction", fmt(exp.training.hint_spec.max_translate_fraction)},
        {"hint.max_rotate_degrees", fmt(exp.training.hint_spec.max_rotate_degrees)},
        {"eval.temperature", fmt(exp.training.eval_temperature)},
    };
}

}  // namespace

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<uint64_t> seed_override, int jobs) {
    try {
        Experiment exp = load_experiment(parse_config_file(config_path), seed_override);
        fs::create_directories(out_dir);
        const Datasets data = obtain_datasets(exp);

        std::vector<std::string> modes;
        if (exp.mode == "both") {
            modes = {"baseline", "hints"};
        } else {
            modes = {exp.mode};
        }
        struct Cell {
            std::string mode;
            uint64_t seed;
        };
        std::vector<Cell> cells;
        for (const auto& mode : modes)
            for (uint64_t seed : exp.seeds) cells.push_back({mode, seed});
        std::vector<CompletedRun> runs(cells.size());
        run_parallel(jobs, static_cast<int>(cells.size()), [&](int i) {
            runs[i] = execute_run(exp, data, cells[i].mode, cells[i].seed, exp.training.alpha);
        });

        write_text_file(out_dir + "/config_resolved.txt",
                        "# config_hash=" + exp.hash + "\n" + canonical_config_text(exp.resolved));
        for (const auto& run : runs) {
            const std::string tag = run.mode + "_seed" + std::to_string(run.seed);
            std::ofstream csv(out_dir + "/run_" + tag + ".csv", std::ios::binary);
            write_run_record_csv(csv, run.record, exp.hash);
            save_model(out_dir + "/model_" + tag + ".txt", run.params, model_meta(exp));
        }

        std::ostringstream summary;
        summary << "# config_hash=" << exp.hash << "\n";
        for (const auto& mode : modes) {
            // a hints cell with alpha=0 is a baseline in all but name
            const bool is_hints = mode == "hints" && exp.training.alpha > 0.0;
            summary << mode << ".mode=" << (is_hints ? "hints" : "baseline") << "\n";
            double acc = 0, tracc = 0, hr = 0, hv = 0, cl = 0;
            int count = 0;
            for (const auto& run : runs) {
                if (run.mode != mode) continue;
                const std::string prefix = mode + ".seed" + std::to_string(run.seed);
                summary << prefix << ".final_test_accuracy=" << fmt(run.final_test_accuracy) << "\n";
                summary << prefix << ".final_train_accuracy=" << fmt(run.final_train_accuracy) << "\n";
                summary << prefix << ".final_class_loss=" << fmt(run.final_class_loss) << "\n";
                summary << prefix << ".final_hint_loss_real=" << fmt(run.final_hint_loss_real) << "\n";
                summary << prefix << ".final_hint_loss_virtual=" << fmt(run.final_hint_loss_virtual)
                        << "\n";
                acc += run.final_test_accuracy;
                tracc += run.final_train_accuracy;
                hr += run.final_hint_loss_real;
                hv += run.final_hint_loss_virtual;
                cl += run.final_class_loss;
                ++count;
            }
            const std::string prefix = mode + ".mean";
            summary << prefix << ".final_test_accuracy=" << fmt(acc / count) << "\n";
            summary << prefix << ".final_train_accuracy=" << fmt(tracc / count) << "\n";
            summary << prefix << ".final_class_loss=" << fmt(cl / count) << "\n";
            summary << prefix << ".final_hint_loss_real=" << fmt(hr / count) << "\n";
            summary << prefix << ".final_hint_loss_virtual=" << fmt(hv / count) << "\n";
        }
        write_text_file(out_dir + "/summary.txt", summary.str());
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_sweep_alpha(const std::string& config_path, const std::string& out_dir,
                    std::optional<uint64_t> seed_override, int jobs,
                    const std::optional<std::vector<double>>& alphas_override) {
    try {
        Experiment exp = load_experiment(parse_config_file(config_path), seed_override);
        const std::vector<double> alphas = alphas_override ? *alphas_override : exp.sweep_alphas;
        if (alphas.empty()) throw ConfigError("sweep: alpha list must be nonempty");
        fs::create_directories(out_dir);
        const Datasets data = obtain_datasets(exp);

        struct Cell {
            double alpha;
            uint64_t seed;
        };
        std::vector<Cell> cells;
        for (double alpha : alphas)
            for (uint64_t seed : exp.seeds) cells.push_back({alpha, seed});
        std::vector<CompletedRun> runs(cells.size());
        run_parallel(jobs, static_cast<int>(cells.size()), [&](int i) {
            runs[i] = execute_run(exp, data, cells[i].alpha == 0.0 ? "baseline" : "hints",
                                  cells[i].seed, cells[i].alpha);
        });

        std::ostringstream csv;
        csv << "# config_hash=" << exp.hash << "\n";
        csv << "alpha,seed,final_accuracy,final_hint_loss_real\n";
        for (size_t i = 0; i < cells.size(); ++i)
            csv << fmt(cells[i].alpha) << "," << cells[i].seed << ","
                << fmt(runs[i].final_test_accuracy) << "," << fmt(runs[i].final_hint_loss_real)
                << "\n";
        write_text_file(out_dir + "/sweep.csv", csv.str());
        write_text_file(out_dir + "/config_resolved.txt",
                        "# config_hash=" + exp.hash + "\n" + canonical_config_text(exp.resolved));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_quality_study(const std::string& config_path, const std::string& out_dir,
                      std::optional<uint64_t> seed_override, int jobs,
                      const std::optional<std::vector<double>>& bandwidths_override) {
    try {
        Experiment exp = load_experiment(parse_config_file(config_path), seed_override);
        if (exp.training.alpha <= 0.0)
            throw ConfigError("quality study requires training.alpha > 0");
        const std::vector<double> bandwidths =
            bandwidths_override ? *bandwidths_override : exp.study_bandwidths;
        if (bandwidths.empty()) throw ConfigError("study: bandwidth list must be nonempty");
        fs::create_directories(out_dir);
        const Datasets data = obtain_datasets(exp);

        // true-distribution and noise endpoints are always included
        std::vector<Sampler> samplers;
        samplers.push_back(make_true_sampler(exp.task, exp.sampler_seed));
        for (double sigma : bandwidths)
            samplers.push_back(fit_kde(data.train.images, sigma, exp.sampler_seed));
        samplers.push_back(
            make_noise_sampler(exp.task.image_side, exp.task.image_side, exp.sampler_seed));

        const uint64_t study_seed = exp.seeds.front();
        std::vector<HintLossSeries> series(samplers.size());
        std::vector<double> fids(samplers.size());
        run_parallel(jobs, static_cast<int>(samplers.size()), [&](int i) {
            fids[i] = quality_report(samplers[i], data.train.images, exp.study_n_samples,
                                     exp.study_embedder_seed)
                          .fid_analog;
            TrainingConfig cfg = exp.training;
            cfg.seed = study_seed;
            cfg.hint_only = true;       // trained only on virtual examples
            cfg.epochs = exp.study_epochs;  // the study uses a short training window
            TrainResult result = run_training(cfg, data.train, samplers[i], data.test);
            if (result.record.aborted)
                throw Error("study run aborted (" + samplers[i].description() +
                            "): " + result.record.abort_reason);
            series[i].sampler = samplers[i].description();
            series[i].on_virtual = result.record.virtual_series();
            series[i].on_real = result.record.real_series();
        });

        const auto rows = correlation_study(series, fids);
        std::ostringstream csv;
        csv << "# config_hash=" << exp.hash << "\n";
        csv << "sampler,fid_analog,pearson_r\n";
        for (const auto& row : rows)
            csv << row.sampler << "," << fmt(row.fid_analog) << "," << fmt(row.pearson_r) << "\n";
        write_text_file(out_dir + "/study.csv", csv.str());
        write_text_file(out_dir + "/config_resolved.txt",
                        "# config_hash=" + exp.hash + "\n" + canonical_config_text(exp.resolved));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_eval(const std::string& model_path, const std::string& dataset_base,
             const std::string& out_path) {
    try {
        ConfigMap meta;
        ClassifierParams params = load_model(model_path, &meta);
        const LabeledSet set = read_labeled_set(dataset_base);

        HintTransformSpec spec{config_double(meta, "hint.flip_probability"),
                               config_double(meta, "hint.max_translate_fraction"),
                               config_double(meta, "hint.max_rotate_degrees")};
        const double eval_t = config_double(meta, "eval.temperature");
        const HintLossVariant variant = parse_hint_loss_variant(meta.at("loss_variant"));

        const double acc = accuracy(classifier_predict(params, set.images), set.labels);
        Rng rng(mix_seed(0x6576616cULL, 0));
        const double hint = evaluate_hint_loss_on_set(
            [&](const Tensor& b) { return classifier_forward(params, b); }, set.images, spec,
            variant, eval_t, rng);

        std::ostringstream out;
        out << "eval.accuracy=" << fmt(acc) << "\n";
        out << "eval.hint_loss=" << fmt(hint) << "\n";
        std::cout << out.str();
        if (!out_path.empty()) write_text_file(out_path, out.str());
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace genhints
