from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='BenchResult',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('dataset', models.CharField(max_length=100, verbose_name='Dataset')),
                ('scheme', models.CharField(blank=True, choices=[('', 'None'), ('rsa', 'RSA signature'),
                                                                 ('pbkdf2', 'PBKDF2 MAC'), ('aes', 'AES cipher')],
                                            max_length=10, verbose_name='Scheme')),
                ('model', models.CharField(choices=[('db', 'Plain database'), ('ocf', 'One code per field'),
                                                    ('oct', 'One code per tuple')],
                                           max_length=3, verbose_name='Model')),
                ('metric', models.CharField(choices=[
                    ('db_size_bytes', 'Database size (bytes)'), ('icdb_size_bytes', 'ICDB size (bytes)'),
                    ('size_ratio', 'ICDB / database size'), ('convert_seconds', 'Conversion time (s)'),
                    ('rewrite_ms', 'Query rewrite (ms)'), ('exec_ms', 'Execution and fetch (ms)'),
                    ('verify_ms', 'Verification (ms)'), ('ratio_vs_baseline', 'ICDB / database execution time'),
                    ('delete_verify_ms', 'DELETE verification (ms)'), ('delete_execute_ms', 'DELETE execution (ms)'),
                    ('delete_revoke_ms', 'DELETE revocation (ms)'), ('insert_convert_ms', 'INSERT conversion (ms)'),
                    ('insert_execute_ms', 'INSERT execution (ms)'),
                ], max_length=32, verbose_name='Metric')),
                ('query', models.TextField(blank=True, verbose_name='Query')),
                ('iterations', models.PositiveIntegerField(default=1, verbose_name='Iterations')),
                ('mean', models.FloatField(verbose_name='Mean')),
                ('std', models.FloatField(default=0.0, verbose_name='Standard deviation')),
                ('created', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ('-created', 'dataset', 'scheme', 'model', 'metric'),
            },
        ),
    ]
