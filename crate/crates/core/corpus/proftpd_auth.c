#include <stdlib.h>
#include <string.h>

int auth_check_plain(const char *real_passwd, const char *input)
{
    char *cleartxt_passwd = NULL;
    size_t cleartxt_passwd_len = 0;
    int res = 0;

    cleartxt_passwd_len = strlen(input);
    cleartxt_passwd = malloc(cleartxt_passwd_len + 1);
    if (cleartxt_passwd == NULL)
        return -1;
    memcpy(cleartxt_passwd, input, cleartxt_passwd_len);
    cleartxt_passwd[cleartxt_passwd_len] = '\0';
    if (strcmp(real_passwd, cleartxt_passwd) == 0)
        res = 1;
    memset(cleartxt_passwd, 0, cleartxt_passwd_len);
    free(cleartxt_passwd);
    return res;
}
