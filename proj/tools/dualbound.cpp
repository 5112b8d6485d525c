#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dualbound/cli.hpp"
#include "dualbound/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pathwise dual bounds for stochastic control"};
    app.require_subcommand(1);

    std::string run_cfg, check_cfg;
    CLI::App* run = app.add_subcommand("run", "execute a config and write results.csv/report.txt");
    run->add_option("config", run_cfg, "key=value config file")->required();
    CLI::App* check = app.add_subcommand("check", "parse a config and print it normalized");
    check->add_option("config", check_cfg, "key=value config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const dualbound::RunConfig cfg = dualbound::parse_config_file(run_cfg);
            return dualbound::run_config(cfg);
        }
        const dualbound::RunConfig cfg = dualbound::parse_config_file(check_cfg);
        std::cout << dualbound::describe_config(cfg);
        return 0;
    } catch (const dualbound::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const dualbound::EstimatorFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
