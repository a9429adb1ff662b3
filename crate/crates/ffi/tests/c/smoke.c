#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hookforge.h"

#define CHECK(expr)                                                                 \
    do {                                                                            \
        if (!(expr)) {                                                              \
            fprintf(stderr, "line %d: %s failed (%s)\n", __LINE__, #expr,          \
                    hf_last_error_message() ? hf_last_error_message() : "no error"); \
            return 1;                                                               \
        }                                                                           \
    } while (0)

static const char *BOB = "rUFiTVw3LSgEqrHV7yPL4nZ1n6f6QgjjfU";
static const char *ALICE = "rhzFipyh5UsycxUjaPzR1RkTJZp9VybKAz";

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    fseek(f, 0, SEEK_SET);
    char *buf = malloc((size_t)n + 1);
    if (fread(buf, 1, (size_t)n, f) != (size_t)n) {
        fclose(f);
        free(buf);
        return NULL;
    }
    buf[n] = 0;
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    CHECK(argc == 2);
    char *workspace = slurp(argv[1]);
    CHECK(workspace != NULL);

    HfProgram *program = NULL;
    CHECK(hf_program_parse(workspace, &program) == HF_OK);
    free(workspace);

    bool ok = false;
    char *report = NULL;
    CHECK(hf_program_check(program, &ok, &report) == HF_OK);
    CHECK(ok);
    hf_string_free(report);

    char *c = NULL;
    CHECK(hf_program_generate_c(program, &c) == HF_OK);
    CHECK(strstr(c, "accept(SBUF(\"Accepted!\"),1);") != NULL);
    hf_string_free(c);

    HfLedger *ledger = hf_ledger_new();
    CHECK(hf_ledger_add_account(ledger, BOB, 100) == HF_OK);
    CHECK(hf_ledger_add_account(ledger, ALICE, 0) == HF_OK);
    CHECK(hf_ledger_install(ledger, ALICE, program, "incoming") == HF_OK);
    bool applied = false;
    CHECK(hf_ledger_pay(ledger, BOB, ALICE, 40, &applied, NULL) == HF_OK);
    CHECK(applied);
    uint64_t drops = 0;
    CHECK(hf_ledger_balance(ledger, ALICE, &drops) == HF_OK);
    CHECK(drops == 40);

    HfProgram *bad = NULL;
    CHECK(hf_program_parse("{}", &bad) == HF_ERR_PARSE);
    CHECK(bad == NULL);
    CHECK(strcmp(hf_last_error_code(), "MALFORMED_DOCUMENT") == 0);

    hf_ledger_free(ledger);
    hf_program_free(program);
    printf("c smoke ok\n");
    return 0;
}
