#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fuplab/errors.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
    using namespace fuplab::cli;

    CLI::App app{"fuplab experiment runner"};
    app.require_subcommand(1);

    fuplab::cli::RunRequest global;
    std::string precision = "double";
    app.add_option("--out", global.out, "output directory, or a .json/.csv path for the main result");
    app.add_option("--seed", global.seed, "global seed")->capture_default_str();
    app.add_option("--threads", global.threads, "worker threads")->capture_default_str();
    app.add_option("--precision", precision, "double or quad")->capture_default_str();
    app.add_flag("--json", global.echo, "also print the main result to stdout");
    app.fallthrough();

    std::string selected;
    std::map<std::string, std::map<std::string, std::string>> given;
    for (const auto& e : experiments()) {
        auto* sub = app.add_subcommand(e.kind, e.summary);
        sub->callback([&selected, kind = e.kind] { selected = kind; });
        for (const auto& p : e.params) {
            auto* opt = sub->add_option_function<std::string>(
                "--" + p.name, [&given, kind = e.kind, name = p.name](const std::string& v) { given[kind][name] = v; },
                p.help);
            opt->default_str(p.default_value.is_null() ? "auto" : p.default_value.dump());
        }
    }

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run an experiment described by a config file");
    run_cmd->add_option("--config", config_path, "INI config file")->required();
    run_cmd->callback([&] { selected = "run"; });

    auto* schema_cmd = app.add_subcommand("schema", "print every experiment and parameter as JSON");
    schema_cmd->callback([&] { selected = "schema"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (selected == "schema") {
            std::cout << schema().dump(2) << "\n";
            return 0;
        }
        RunRequest req;
        if (selected == "run") {
            req = parse_config_file(config_path);
            // command-line globals override the file when given explicitly
            if (app.count("--out")) req.out = global.out;
            if (app.count("--seed")) req.seed = global.seed;
            if (app.count("--threads")) req.threads = global.threads;
            if (app.count("--precision")) req.precision = precision;
            if (app.count("--json")) req.echo = true;
        } else {
            req.kind = selected;
            req.out = global.out;
            req.seed = global.seed;
            req.threads = global.threads;
            req.precision = precision;
            req.echo = global.echo;
            const Experiment& e = find_experiment(selected);
            for (const auto& [name, text] : given[selected]) {
                for (const auto& p : e.params)
                    if (p.name == name) req.params[name] = parse_value(p, text);
            }
        }
        return run(req, std::cerr);
    } catch (const fuplab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
}
